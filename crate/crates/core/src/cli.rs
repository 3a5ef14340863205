//! Command-line front end: study bundles on disk, method dispatch, k-fold
//! prediction evaluation and report files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{standardize, StandardizationRecord, Study, StudyKind, TaskData};
use crate::error::{Error, Result};
use crate::lasso::support;
use crate::oracle::{oracle_trans_lasso, oracle_trans_lasso_l0, OracleConfig};
use crate::pipeline::{naive_trans_lasso, plain_lasso, trans_lasso, ThetaPenalty, TransLassoConfig};
use crate::sim::{gen_task, run_replications, Method, SimMethodsConfig, SimScenario};
use crate::util::{derive_seed, seeded_permutation};
use crate::lasso::fold_assignment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Fit,
    Simulate,
    Evaluate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Lasso,
    Naive,
    Oracle,
    TransLasso,
    OracleL0,
}

impl MethodArg {
    pub fn name(self) -> &'static str {
        self.as_method().name()
    }

    fn as_method(self) -> Method {
        match self {
            MethodArg::Lasso => Method::Lasso,
            MethodArg::Naive => Method::Naive,
            MethodArg::Oracle => Method::Oracle,
            MethodArg::TransLasso => Method::TransLasso,
            MethodArg::OracleL0 => Method::OracleL0,
        }
    }

    fn needs_informative(self) -> bool {
        matches!(self, MethodArg::Oracle | MethodArg::OracleL0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tuning {
    /// Closed-form penalties scaled by sqrt(2 log p / n).
    Auto,
    /// Cross-validated pooled penalty, correction penalty scaled from it.
    Cv,
}

/// Transfer-learning Lasso estimators for a primary study with auxiliary studies.
#[derive(Clone, Debug, Parser)]
#[command(name = "translasso", version)]
pub struct RunConfig {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Estimator for `fit`; extra method compared against the Lasso in `evaluate`.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Methods for `simulate` and `evaluate` (comma separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Vec<MethodArg>,
    /// JSON manifest listing the study CSV files.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// JSON scenario file for simulated data; `default` uses built-in values.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Informative auxiliary studies (1-based positions or ids, comma separated).
    #[arg(long, value_delimiter = ',')]
    pub informative: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    /// Run 200 replications instead of `--reps`.
    #[arg(long)]
    pub full_reps: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, value_enum, default_value_t = Tuning::Auto)]
    pub tuning: Tuning,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "t-star-exponent", value_delimiter = ',', default_value = "0.75")]
    pub t_star_exponent: Vec<f64>,
    #[arg(long)]
    pub lambda_theta: Option<f64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Skip centering of covariates and responses when loading studies.
    #[arg(long)]
    pub no_center: bool,
    /// Skip column scaling when loading studies.
    #[arg(long)]
    pub no_scale: bool,
}

/// One manifest record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub role: StudyKind,
    pub id: String,
    pub path: PathBuf,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads one study CSV: header row with a `y` column, numeric cells.
/// Returns the covariate names in file order.
pub fn read_study_csv(path: &Path, id: &str, kind: StudyKind) -> Result<(Study, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| parse_err(path, 1, e.to_string()))?;
    let headers = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?.clone();
    if headers.is_empty() {
        return Err(parse_err(path, 1, "empty file"));
    }
    let y_col = headers
        .iter()
        .position(|h| h.trim() == "y")
        .ok_or_else(|| parse_err(path, 1, "missing `y` column"))?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != y_col)
        .map(|(_, h)| h.trim().to_string())
        .collect();
    if names.is_empty() {
        return Err(parse_err(path, 1, "no covariate columns"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(path, line, e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", headers.len(), rec.len()),
            ));
        }
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                parse_err(path, line, format!("non-numeric value `{cell}` in column `{}`", &headers[c]))
            })?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("non-finite value in column `{}`", &headers[c])));
            }
            if c == y_col {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    if ys.is_empty() {
        return Err(parse_err(path, 2, "no data rows"));
    }
    let x = Array2::from_shape_vec((ys.len(), names.len()), xs).map_err(|e| parse_err(path, 1, e.to_string()))?;
    let study = Study::new(id, x, Array1::from(ys), kind)?;
    Ok((study, names))
}

/// Loaded studies with covariate names and the transform applied.
#[derive(Clone, Debug)]
pub struct LoadedTask {
    pub task: TaskData,
    pub covariates: Vec<String>,
    pub record: Option<StandardizationRecord>,
}

/// Parses a manifest and its CSV studies; standardizes when `center` or
/// `scale` is set. Relative paths resolve against the manifest directory.
pub fn load_studies(manifest_path: &Path, center: bool, scale: bool) -> Result<LoadedTask> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(&text).map_err(|e| parse_err(manifest_path, e.line(), e.to_string()))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let primaries = entries.iter().filter(|e| e.role == StudyKind::Primary).count();
    if primaries != 1 {
        return Err(parse_err(
            manifest_path,
            1,
            format!("manifest must list exactly one primary study, found {primaries}"),
        ));
    }
    let mut primary = None;
    let mut auxiliaries = Vec::new();
    let mut reference: Option<(PathBuf, Vec<String>)> = None;
    // primary first so that column checks report against it
    let ordered = entries
        .iter()
        .filter(|e| e.role == StudyKind::Primary)
        .chain(entries.iter().filter(|e| e.role == StudyKind::Auxiliary));
    for e in ordered {
        let path = if e.path.is_absolute() { e.path.clone() } else { base.join(&e.path) };
        let (study, names) = read_study_csv(&path, &e.id, e.role)?;
        match &reference {
            None => reference = Some((path.clone(), names)),
            Some((ref_path, ref_names)) => {
                if let Some(pos) = (0..ref_names.len().max(names.len()))
                    .find(|&i| ref_names.get(i) != names.get(i))
                {
                    return Err(parse_err(
                        &path,
                        1,
                        format!(
                            "covariate column {} is `{}`, expected `{}` as in {}",
                            pos + 1,
                            names.get(pos).map_or("<missing>", String::as_str),
                            ref_names.get(pos).map_or("<missing>", String::as_str),
                            ref_path.display()
                        ),
                    ));
                }
            }
        }
        match e.role {
            StudyKind::Primary => primary = Some(study),
            StudyKind::Auxiliary => auxiliaries.push(study),
        }
    }
    let task = TaskData::new(primary.expect("one primary"), auxiliaries)?;
    let covariates = reference.map(|(_, n)| n).unwrap_or_default();
    if center || scale {
        let (task, record) = standardize(&task, center, scale)?;
        Ok(LoadedTask {
            task,
            covariates,
            record: Some(record),
        })
    } else {
        Ok(LoadedTask {
            task,
            covariates,
            record: None,
        })
    }
}

fn write_study_csv(path: &Path, study: &Study, names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Serialize(e.to_string()))?;
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
    header.push("y");
    w.write_record(&header).map_err(ser)?;
    for (row, y) in study.x.axis_iter(Axis(0)).zip(study.y.iter()) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(y.to_string());
        w.write_record(&rec).map_err(ser)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Writes every study as CSV plus a `manifest.json` in `dir`.
pub fn write_task(task: &TaskData, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let names: Vec<String> = (1..=task.p()).map(|j| format!("x{j}")).collect();
    let mut entries = Vec::new();
    for s in std::iter::once(&task.primary).chain(&task.auxiliaries) {
        let file = format!("{}.csv", s.id);
        write_study_csv(&dir.join(&file), s, &names)?;
        entries.push(ManifestEntry {
            role: s.kind,
            id: s.id.clone(),
            path: PathBuf::from(file),
        });
    }
    let manifest = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&entries).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(&manifest, text + "\n").map_err(|e| Error::io(&manifest, e))?;
    Ok(manifest)
}

/// Shared method settings for `fit` and `evaluate`.
#[derive(Clone, Debug)]
pub struct MethodSettings {
    pub tuning: Tuning,
    pub folds_cv: usize,
    pub seed: u64,
    pub t_star_exponents: Vec<f64>,
    pub lambda_theta: Option<f64>,
    /// Informative auxiliary positions (0-based) for the oracle methods.
    pub informative: Option<Vec<usize>>,
}

impl Default for MethodSettings {
    fn default() -> Self {
        MethodSettings {
            tuning: Tuning::Auto,
            folds_cv: 8,
            seed: 1,
            t_star_exponents: vec![0.75],
            lambda_theta: None,
            informative: None,
        }
    }
}

impl MethodSettings {
    fn oracle(&self) -> OracleConfig {
        match self.tuning {
            Tuning::Auto => OracleConfig::default(),
            Tuning::Cv => OracleConfig::cv_scaled(self.folds_cv, derive_seed(self.seed, 17)),
        }
    }

    fn trans(&self) -> TransLassoConfig {
        TransLassoConfig {
            seed: self.seed,
            t_star_exponents: self.t_star_exponents.clone(),
            oracle: self.oracle(),
            lambda_theta: self.lambda_theta.map_or(ThetaPenalty::Auto, ThetaPenalty::Fixed),
            cross_fit: true,
        }
    }
}

/// Diagnostics of one adaptive fit half.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfReport {
    pub sparsity_index: Vec<f64>,
    pub t_star: usize,
    /// Candidate sets as auxiliary ids.
    pub candidate_sets: Vec<Vec<String>>,
    pub theta: Vec<f64>,
    pub lambda_theta: f64,
    pub holdout_errors: Vec<f64>,
    pub aggregate_error: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodOutput {
    pub method: MethodArg,
    pub lambdas: BTreeMap<String, f64>,
    pub coef: Vec<f64>,
    pub nonzeros: usize,
    pub converged: bool,
    pub diagnostics: Vec<HalfReport>,
}

/// Fits one method on `task`.
pub fn run_method(task: &TaskData, method: MethodArg, settings: &MethodSettings) -> Result<MethodOutput> {
    let oracle_cfg = settings.oracle();
    let mut lambdas = BTreeMap::new();
    let mut diagnostics = Vec::new();
    let informative = || -> Result<Vec<usize>> {
        settings
            .informative
            .clone()
            .ok_or_else(|| Error::InvalidArgument(format!("method {} needs --informative", method.name())))
    };
    let (coef, converged) = match method {
        MethodArg::Lasso => {
            let f = plain_lasso(task, &oracle_cfg)?;
            lambdas.insert("lambda".into(), f.lambda);
            (f.coef, f.converged)
        }
        MethodArg::Naive | MethodArg::Oracle => {
            let set = match method {
                MethodArg::Naive => (0..task.k()).collect(),
                _ => informative()?,
            };
            let f = oracle_trans_lasso(task, &set, &oracle_cfg)?;
            lambdas.insert("lambda_w".into(), f.w.lambda);
            lambdas.insert("lambda_delta".into(), f.delta.lambda);
            let ok = f.w.converged && f.delta.converged;
            (f.beta.coef, ok)
        }
        MethodArg::OracleL0 => {
            let set = informative()?;
            let f = oracle_trans_lasso_l0(task, &set, &oracle_cfg)?;
            lambdas.insert("lambda_beta".into(), f.beta.lambda);
            for (&k, d) in f.informative.iter().zip(&f.deltas) {
                lambdas.insert(format!("lambda_{}", task.auxiliaries[k].id), d.lambda);
            }
            let ok = f.beta.converged && f.deltas.iter().all(|d| d.converged);
            (f.beta.coef, ok)
        }
        MethodArg::TransLasso => {
            let f = trans_lasso(task, &settings.trans())?;
            for h in &f.halves {
                diagnostics.push(HalfReport {
                    sparsity_index: h.report.index.clone(),
                    t_star: h.report.t_star,
                    candidate_sets: h
                        .candidates
                        .sets
                        .iter()
                        .map(|s| s.iter().map(|&k| task.auxiliaries[k].id.clone()).collect())
                        .collect(),
                    theta: h.aggregation.theta.clone(),
                    lambda_theta: h.aggregation.lambda_theta,
                    holdout_errors: h.aggregation.holdout_errors.clone(),
                    aggregate_error: h.aggregation.aggregate_error,
                    gap: h.aggregation.gap,
                });
            }
            (f.beta.coef, true)
        }
    };
    let _ = naive_trans_lasso; // same estimator as the Naive arm above
    Ok(MethodOutput {
        method,
        lambdas,
        nonzeros: support(coef.view()).len(),
        coef: coef.to_vec(),
        converged,
        diagnostics,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodEvaluation {
    pub method: MethodArg,
    pub fold_errors: Vec<f64>,
    pub mean_error: f64,
    /// Mean error relative to the Lasso's.
    pub ratio_to_lasso: f64,
    pub fold_nonzeros: Vec<usize>,
    pub fold_lambdas: Vec<BTreeMap<String, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub folds: usize,
    pub seed: u64,
    pub methods: Vec<MethodEvaluation>,
}

impl EvaluationReport {
    pub fn get(&self, method: MethodArg) -> Option<&MethodEvaluation> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// k-fold prediction error on the primary study; auxiliaries are always
/// fully available for training. The Lasso is evaluated first as the
/// reference for the ratios.
pub fn evaluate_prediction(
    task: &TaskData,
    methods: &[MethodArg],
    folds: usize,
    seed: u64,
    settings: &MethodSettings,
) -> Result<EvaluationReport> {
    let n0 = task.primary.n();
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if n0 < folds {
        return Err(Error::InvalidArgument(format!(
            "primary sample of {n0} rows cannot be split into {folds} folds"
        )));
    }
    let mut list = vec![MethodArg::Lasso];
    for &m in methods {
        if !list.contains(&m) {
            list.push(m);
        }
    }
    let assignment = fold_assignment(&seeded_permutation(n0, derive_seed(seed, 5)), folds);
    let mut evals: Vec<MethodEvaluation> = list
        .iter()
        .map(|&method| MethodEvaluation {
            method,
            fold_errors: Vec::with_capacity(folds),
            mean_error: 0.0,
            ratio_to_lasso: 0.0,
            fold_nonzeros: Vec::with_capacity(folds),
            fold_lambdas: Vec::with_capacity(folds),
        })
        .collect();
    for f in 0..folds {
        let train: Vec<usize> = (0..n0).filter(|&i| assignment[i] != f).collect();
        let test: Vec<usize> = (0..n0).filter(|&i| assignment[i] == f).collect();
        let sub = task.with_primary(task.primary.select_rows(&train));
        let held = task.primary.select_rows(&test);
        let fold_settings = MethodSettings {
            seed: derive_seed(seed, 100 + f as u64),
            ..settings.clone()
        };
        for ev in &mut evals {
            let out = run_method(&sub, ev.method, &fold_settings)?;
            let pred = held.x.dot(&Array1::from(out.coef));
            let r = &held.y - &pred;
            ev.fold_errors.push(r.dot(&r) / test.len() as f64);
            ev.fold_nonzeros.push(out.nonzeros);
            ev.fold_lambdas.push(out.lambdas);
        }
    }
    for ev in &mut evals {
        ev.mean_error = ev.fold_errors.iter().sum::<f64>() / folds as f64;
    }
    let base = evals[0].mean_error;
    for ev in &mut evals {
        ev.ratio_to_lasso = if ev.method == MethodArg::Lasso { 1.0 } else { ev.mean_error / base };
    }
    Ok(EvaluationReport {
        folds,
        seed,
        methods: evals,
    })
}

fn resolve_informative(task: &TaskData, raw: &[String]) -> Result<Option<Vec<usize>>> {
    if raw.is_empty() {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(raw.len());
    for r in raw {
        let r = r.trim();
        if let Some(k) = task.auxiliaries.iter().position(|s| s.id == r) {
            out.push(k);
            continue;
        }
        match r.parse::<usize>() {
            Ok(k) if k >= 1 && k <= task.k() => out.push(k - 1),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "informative study `{r}` is neither an auxiliary id nor a position in 1..={}",
                    task.k()
                )))
            }
        }
    }
    Ok(Some(task.canonical_set(&out)?))
}

fn load_scenario(arg: &str) -> Result<SimScenario> {
    if arg == "default" {
        return Ok(SimScenario::default());
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let sc: SimScenario = serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    sc.validate()?;
    Ok(sc)
}

fn input_task(cfg: &RunConfig) -> Result<LoadedTask> {
    match (&cfg.manifest, &cfg.scenario) {
        (Some(m), _) => load_studies(m, !cfg.no_center, !cfg.no_scale),
        (None, Some(s)) => {
            let sc = load_scenario(s)?;
            let (task, _) = gen_task(&sc)?;
            Ok(LoadedTask {
                covariates: (1..=task.p()).map(|j| format!("x{j}")).collect(),
                task,
                record: None,
            })
        }
        (None, None) => Err(Error::InvalidArgument("--manifest or --scenario is required".into())),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct FitReport<'a> {
    method: MethodArg,
    tuning: Tuning,
    seed: u64,
    n_primary: usize,
    auxiliaries: Vec<&'a str>,
    informative: Option<Vec<&'a str>>,
    lambdas: &'a BTreeMap<String, f64>,
    nonzeros: usize,
    converged: bool,
    intercept_raw: Option<f64>,
    diagnostics: &'a [HalfReport],
}

/// Executes one CLI invocation.
pub fn run(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let settings = |task: &TaskData| -> Result<MethodSettings> {
        Ok(MethodSettings {
            tuning: cfg.tuning,
            folds_cv: 8,
            seed: cfg.seed,
            t_star_exponents: cfg.t_star_exponent.clone(),
            lambda_theta: cfg.lambda_theta,
            informative: resolve_informative(task, &cfg.informative)?,
        })
    };
    match cfg.mode {
        Mode::Simulate => {
            let sc = match &cfg.scenario {
                Some(s) => load_scenario(s)?,
                None => SimScenario::default(),
            };
            let sc = SimScenario { seed: cfg.seed, ..sc };
            let methods: Vec<Method> = if cfg.methods.is_empty() {
                vec![Method::Lasso, Method::Naive, Method::Oracle, Method::TransLasso]
            } else {
                cfg.methods.iter().map(|m| m.as_method()).collect()
            };
            let reps = if cfg.full_reps { 200 } else { cfg.reps };
            let ms = MethodSettings {
                tuning: cfg.tuning,
                seed: cfg.seed,
                t_star_exponents: cfg.t_star_exponent.clone(),
                lambda_theta: cfg.lambda_theta,
                ..Default::default()
            };
            let mcfg = SimMethodsConfig {
                oracle: ms.oracle(),
                trans: ms.trans(),
            };
            let table = run_replications(&sc, &methods, reps, &mcfg)?;
            table.write_files(&cfg.out)
        }
        Mode::Fit => {
            let method = cfg
                .method
                .ok_or_else(|| Error::InvalidArgument("--method is required in fit mode".into()))?;
            let loaded = input_task(cfg)?;
            let task = &loaded.task;
            let settings = settings(task)?;
            if method.needs_informative() && settings.informative.is_none() {
                return Err(Error::InvalidArgument(format!("method {} needs --informative", method.name())));
            }
            let out = run_method(task, method, &settings)?;
            let coef = Array1::from(out.coef.clone());
            let (intercept, raw) = match &loaded.record {
                Some(r) => {
                    let (b0, b) = r.primary().to_raw(coef.view());
                    (Some(b0), b)
                }
                None => (None, coef.clone()),
            };
            let report = FitReport {
                method,
                tuning: cfg.tuning,
                seed: cfg.seed,
                n_primary: task.primary.n(),
                auxiliaries: task.auxiliaries.iter().map(|s| s.id.as_str()).collect(),
                informative: settings
                    .informative
                    .as_ref()
                    .map(|v| v.iter().map(|&k| task.auxiliaries[k].id.as_str()).collect()),
                lambdas: &out.lambdas,
                nonzeros: out.nonzeros,
                converged: out.converged,
                intercept_raw: intercept,
                diagnostics: &out.diagnostics,
            };
            write_json(&cfg.out.join("fit.json"), &report)?;
            let path = cfg.out.join("coefficients.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Serialize(e.to_string()))?;
            let ser = |e: csv::Error| Error::Serialize(e.to_string());
            w.write_record(["covariate", "coef", "coef_raw"]).map_err(ser)?;
            for (j, name) in loaded.covariates.iter().enumerate() {
                w.write_record([name.clone(), format!("{:e}", coef[j]), format!("{:e}", raw[j])])
                    .map_err(ser)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))
        }
        Mode::Evaluate => {
            let loaded = input_task(cfg)?;
            let task = &loaded.task;
            let settings = settings(task)?;
            let methods: Vec<MethodArg> = match cfg.method {
                Some(m) => vec![m],
                None if !cfg.methods.is_empty() => cfg.methods.clone(),
                None => vec![MethodArg::Naive, MethodArg::TransLasso],
            };
            if methods.iter().any(|m| m.needs_informative()) && settings.informative.is_none() {
                return Err(Error::InvalidArgument("oracle methods need --informative".into()));
            }
            let report = evaluate_prediction(task, &methods, cfg.folds, cfg.seed, &settings)?;
            write_json(&cfg.out.join("evaluation.json"), &report)?;
            let path = cfg.out.join("folds.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Serialize(e.to_string()))?;
            let ser = |e: csv::Error| Error::Serialize(e.to_string());
            w.write_record(["method", "fold", "error", "nonzeros"]).map_err(ser)?;
            for m in &report.methods {
                for (f, (e, nz)) in m.fold_errors.iter().zip(&m.fold_nonzeros).enumerate() {
                    w.write_record([m.method.name().to_string(), f.to_string(), format!("{e:e}"), nz.to_string()])
                        .map_err(ser)?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))
        }
    }
}
