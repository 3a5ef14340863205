//! Synthetic transfer-learning tasks and replicated method comparisons.
//!
//! Designs are Gaussian with Toeplitz covariances; coefficients follow two
//! contrast configurations: a fixed shift on a random support (`I`) or
//! Laplace perturbations on a random half of the coordinates (`Ii`).

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Study, StudyKind, TaskData};
use crate::detect::{ranks_informative_first, sparsity_report, t_star_for};
use crate::error::{Error, Result};
use crate::oracle::{oracle_trans_lasso, oracle_trans_lasso_l0, OracleConfig};
use crate::pipeline::{naive_trans_lasso, plain_lasso, split_primary, trans_lasso, TransLassoConfig};
use crate::util::{derive_seed, rng_from_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefConfig {
    /// `w_j = β_j − shift · 1(j ∈ H_k)`
    I,
    /// `w_j = β_j + ξ_j 1(j ∈ H_k)`, `|H_k| = p/2`, Laplace `ξ`.
    Ii,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovRegime {
    Identity,
    HomogeneousToeplitz,
    Heterogeneous,
}

impl CovRegime {
    pub fn name(self) -> &'static str {
        match self {
            CovRegime::Identity => "identity",
            CovRegime::HomogeneousToeplitz => "homogeneous_toeplitz",
            CovRegime::Heterogeneous => "heterogeneous",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimScenario {
    pub p: usize,
    pub n0: usize,
    pub nk: usize,
    pub k: usize,
    pub s: usize,
    pub beta_value: f64,
    pub h: usize,
    /// `|A|`; the informative studies are the first `|A|` auxiliaries.
    pub informative: usize,
    pub coef_config: CoefConfig,
    pub cov_regime: CovRegime,
    pub noise_sd: f64,
    /// Shift applied on `H_k` in configuration `I`.
    pub contrast_shift: f64,
    /// `|H_k|` for non-informative studies in configuration `I`.
    pub noninformative_support: usize,
    pub seed: u64,
}

impl Default for SimScenario {
    fn default() -> Self {
        SimScenario {
            p: 500,
            n0: 150,
            nk: 100,
            k: 20,
            s: 16,
            beta_value: 0.3,
            h: 2,
            informative: 20,
            coef_config: CoefConfig::I,
            cov_regime: CovRegime::Identity,
            noise_sd: 1.0,
            contrast_shift: 0.3,
            noninformative_support: 50,
            seed: 1,
        }
    }
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.p == 0 || self.n0 == 0 || self.nk == 0 {
            return bad("p, n0 and nk must be positive".into());
        }
        if self.s > self.p {
            return bad(format!("s = {} exceeds p = {}", self.s, self.p));
        }
        if self.informative > self.k {
            return bad(format!("|A| = {} exceeds K = {}", self.informative, self.k));
        }
        if self.h > self.p {
            return bad(format!("h = {} exceeds p = {}", self.h, self.p));
        }
        if !(self.noise_sd >= 0.0) {
            return bad("noise_sd must be non-negative".into());
        }
        Ok(())
    }

    pub fn informative_set(&self) -> Vec<usize> {
        (0..self.informative).collect()
    }

    fn is_informative(&self, study: usize) -> bool {
        study == 0 || study <= self.informative
    }
}

/// Toeplitz matrix from its first row.
pub fn toeplitz(first_row: &[f64]) -> Array2<f64> {
    let p = first_row.len();
    Array2::from_shape_fn((p, p), |(i, j)| first_row[i.abs_diff(j)])
}

/// Covariance of study `study` (0 = primary, `1..=K` auxiliaries).
/// `informative` tells whether the study belongs to `A ∪ {0}`.
pub fn gen_covariance(regime: CovRegime, study: usize, p: usize, k_total: usize, informative: bool) -> Result<Array2<f64>> {
    let geometric = || -> Vec<f64> { (0..p).map(|j| if j <= k_total { 0.8f64.powi(j as i32) } else { 0.0 }).collect() };
    let banded = || -> Result<Vec<f64>> {
        if study == 0 || 2 * study > p {
            return Err(Error::InvalidArgument(format!(
                "banded covariance undefined for study {study} at p = {p}"
            )));
        }
        let v = 1.0 / (study as f64 + 1.0);
        Ok((0..p).map(|j| if j == 0 { 1.0 } else if j < 2 * study { v } else { 0.0 }).collect())
    };
    let row = match regime {
        CovRegime::Identity => return Ok(Array2::eye(p)),
        CovRegime::HomogeneousToeplitz => {
            if informative || study == 0 {
                geometric()
            } else {
                banded()?
            }
        }
        CovRegime::Heterogeneous => {
            if study == 0 {
                return Ok(Array2::eye(p));
            }
            banded()?
        }
    };
    let sigma = toeplitz(&row);
    cholesky_rows(&sigma).ok_or(Error::NotPositiveDefinite {
        regime: regime.name().into(),
        study,
        p,
    })?;
    Ok(sigma)
}

/// Sparse rows of a lower Cholesky factor; `None` means identity.
#[derive(Clone, Debug)]
struct Factor(Option<Vec<Vec<(usize, f64)>>>);

fn cholesky_rows(sigma: &Array2<f64>) -> Option<Vec<Vec<(usize, f64)>>> {
    let p = sigma.nrows();
    let m = DMatrix::from_fn(p, p, |i, j| sigma[[i, j]]);
    let l = m.cholesky()?.unpack();
    Some(
        (0..p)
            .map(|i| {
                (0..=i)
                    .filter_map(|j| {
                        let v = l[(i, j)];
                        (v != 0.0).then_some((j, v))
                    })
                    .collect()
            })
            .collect(),
    )
}

impl Factor {
    fn sample(&self, rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
        let mut x = Array2::<f64>::zeros((n, p));
        let mut z = vec![0.0; p];
        for mut row in x.rows_mut() {
            match &self.0 {
                None => row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
                Some(rows) => {
                    z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
                    for (out, lrow) in row.iter_mut().zip(rows) {
                        *out = lrow.iter().map(|&(j, l)| l * z[j]).sum();
                    }
                }
            }
        }
        x
    }
}

/// Cholesky factors for every study of a scenario, shared across replications.
#[derive(Clone, Debug)]
pub struct DesignModel {
    factors: Vec<Factor>,
}

impl DesignModel {
    pub fn new(sc: &SimScenario) -> Result<Self> {
        sc.validate()?;
        let mut cache: HashMap<Vec<u64>, Factor> = HashMap::new();
        let mut factors = Vec::with_capacity(sc.k + 1);
        for study in 0..=sc.k {
            let sigma = gen_covariance(sc.cov_regime, study, sc.p, sc.k, sc.is_informative(study))?;
            let key: Vec<u64> = sigma.row(0).iter().map(|v| v.to_bits()).collect();
            let is_identity = sigma.row(0).iter().enumerate().all(|(j, &v)| v == if j == 0 { 1.0 } else { 0.0 });
            let f = cache
                .entry(key)
                .or_insert_with(|| {
                    if is_identity {
                        Factor(None)
                    } else {
                        Factor(Some(cholesky_rows(&sigma).expect("checked in gen_covariance")))
                    }
                })
                .clone();
            factors.push(f);
        }
        Ok(DesignModel { factors })
    }
}

/// True parameters of a simulated task.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Truth {
    pub beta: Array1<f64>,
    /// One coefficient vector per auxiliary study.
    pub w: Vec<Array1<f64>>,
    /// Informative auxiliary positions (0-based).
    pub informative: Vec<usize>,
}

/// Laplace(0, b) by inverse CDF.
fn laplace(rng: &mut ChaCha8Rng, b: f64) -> f64 {
    let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
    -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

pub fn gen_coefficients(sc: &SimScenario, rng: &mut ChaCha8Rng) -> Truth {
    let p = sc.p;
    let beta: Array1<f64> = (0..p).map(|j| if j < sc.s { sc.beta_value } else { 0.0 }).collect();
    let mut w = Vec::with_capacity(sc.k);
    for k in 0..sc.k {
        let informative = k < sc.informative;
        let mut wk = beta.clone();
        match sc.coef_config {
            CoefConfig::I => {
                let size = if informative { sc.h } else { sc.noninformative_support.min(p) };
                for j in sample(rng, p, size).into_iter() {
                    wk[j] -= sc.contrast_shift;
                }
            }
            CoefConfig::Ii => {
                let b = if informative { 2.0 * sc.h as f64 / p as f64 } else { 100.0 / p as f64 };
                let mut support = sample(rng, p, p / 2).into_vec();
                support.sort_unstable();
                for j in support {
                    wk[j] += laplace(rng, b);
                }
            }
        }
        w.push(wk);
    }
    Truth {
        beta,
        w,
        informative: sc.informative_set(),
    }
}

fn draw_study(
    rng: &mut ChaCha8Rng,
    factor: &Factor,
    id: String,
    n: usize,
    coef: &Array1<f64>,
    noise_sd: f64,
    kind: StudyKind,
) -> Study {
    let x = factor.sample(rng, n, coef.len());
    let mut y = x.dot(coef);
    if noise_sd > 0.0 {
        y.iter_mut().for_each(|v| *v += noise_sd * rng.sample::<f64, _>(StandardNormal));
    }
    Study { id, x, y, kind }
}

/// Draws a task with the scenario's own seed.
pub fn gen_task(sc: &SimScenario) -> Result<(TaskData, Truth)> {
    let model = DesignModel::new(sc)?;
    Ok(gen_task_with(sc, &model, sc.seed))
}

/// Draws a task from precomputed factors with an explicit seed.
pub fn gen_task_with(sc: &SimScenario, model: &DesignModel, seed: u64) -> (TaskData, Truth) {
    // separate streams keep the primary sample identical across |A| cells
    let truth = gen_coefficients(sc, &mut rng_from_seed(derive_seed(seed, 0)));
    let primary = draw_study(
        &mut rng_from_seed(derive_seed(seed, 1)),
        &model.factors[0],
        "primary".into(),
        sc.n0,
        &truth.beta,
        sc.noise_sd,
        StudyKind::Primary,
    );
    let auxiliaries = (0..sc.k)
        .map(|k| {
            draw_study(
                &mut rng_from_seed(derive_seed(seed, k as u64 + 2)),
                &model.factors[k + 1],
                format!("aux{}", k + 1),
                sc.nk,
                &truth.w[k],
                sc.noise_sd,
                StudyKind::Auxiliary,
            )
        })
        .collect();
    (TaskData { primary, auxiliaries }, truth)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lasso,
    Naive,
    Oracle,
    OracleL0,
    TransLasso,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lasso => "lasso",
            Method::Naive => "naive",
            Method::Oracle => "oracle",
            Method::OracleL0 => "oracle_l0",
            Method::TransLasso => "trans_lasso",
        }
    }

    pub const ALL: [Method; 5] = [
        Method::Lasso,
        Method::Naive,
        Method::Oracle,
        Method::OracleL0,
        Method::TransLasso,
    ];
}

/// Per-replication SSE for each method plus the ranking statistic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricTable {
    pub scenario: SimScenario,
    pub reps: usize,
    pub methods: Vec<Method>,
    /// `sse[m][r]`: method `methods[m]`, replication `r`.
    pub sse: Vec<Vec<f64>>,
    /// Whether the informative studies occupied the lowest indices.
    pub rank_hits: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_sse: f64,
    pub se_sse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: SimScenario,
    pub reps: usize,
    pub methods: Vec<MethodSummary>,
    pub c_hat: f64,
}

pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl MetricTable {
    /// Fraction of replications in which every informative study ranked below
    /// every non-informative one.
    pub fn c_hat(&self) -> f64 {
        self.rank_hits.iter().filter(|&&b| b).count() as f64 / self.rank_hits.len() as f64
    }

    pub fn sse_of(&self, method: Method) -> Option<&[f64]> {
        self.methods.iter().position(|&m| m == method).map(|i| self.sse[i].as_slice())
    }

    pub fn mean_se(&self, method: Method) -> Option<(f64, f64)> {
        self.sse_of(method).map(mean_se)
    }

    pub fn summary(&self) -> Summary {
        Summary {
            scenario: self.scenario.clone(),
            reps: self.reps,
            methods: self
                .methods
                .iter()
                .zip(&self.sse)
                .map(|(&method, v)| {
                    let (mean_sse, se_sse) = mean_se(v);
                    MethodSummary { method, mean_sse, se_sse }
                })
                .collect(),
            c_hat: self.c_hat(),
        }
    }

    /// Long-format CSV: scenario fields, method, rep, sse.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let sc = &self.scenario;
        let ser = |e: csv::Error| Error::Serialize(e.to_string());
        w.write_record([
            "p", "n0", "nk", "k", "s", "beta_value", "h", "informative", "coef_config", "cov_regime", "noise_sd",
            "contrast_shift", "noninformative_support", "seed", "method", "rep", "sse",
        ])
        .map_err(ser)?;
        let coef = match sc.coef_config {
            CoefConfig::I => "i",
            CoefConfig::Ii => "ii",
        };
        for (m, v) in self.methods.iter().zip(&self.sse) {
            for (rep, sse) in v.iter().enumerate() {
                w.write_record([
                    sc.p.to_string(),
                    sc.n0.to_string(),
                    sc.nk.to_string(),
                    sc.k.to_string(),
                    sc.s.to_string(),
                    sc.beta_value.to_string(),
                    sc.h.to_string(),
                    sc.informative.to_string(),
                    coef.to_string(),
                    sc.cov_regime.name().to_string(),
                    sc.noise_sd.to_string(),
                    sc.contrast_shift.to_string(),
                    sc.noninformative_support.to_string(),
                    sc.seed.to_string(),
                    m.name().to_string(),
                    rep.to_string(),
                    format!("{sse:e}"),
                ])
                .map_err(ser)?;
            }
        }
        w.flush().map_err(|e| Error::Serialize(e.to_string()))?;
        Ok(())
    }

    pub fn write_files(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv_path = dir.join("sse.csv");
        let f = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let json_path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&self.summary()).map_err(|e| Error::Serialize(e.to_string()))?;
        std::fs::write(&json_path, text + "\n").map_err(|e| Error::io(&json_path, e))?;
        Ok(())
    }
}

/// Settings of the methods run inside each replication.
#[derive(Clone, Debug, Default)]
pub struct SimMethodsConfig {
    pub oracle: OracleConfig,
    pub trans: TransLassoConfig,
}

/// Seed of replication `rep`.
pub fn rep_seed(sc: &SimScenario, rep: usize) -> u64 {
    sc.seed.wrapping_add(rep as u64)
}

struct RepOutcome {
    sse: Vec<f64>,
    rank_hit: bool,
}

fn sse(est: &Array1<f64>, truth: &Array1<f64>) -> f64 {
    est.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn run_one(sc: &SimScenario, model: &DesignModel, methods: &[Method], cfg: &SimMethodsConfig, seed: u64) -> Result<RepOutcome> {
    let (task, truth) = gen_task_with(sc, model, seed);
    let informative = truth.informative.clone();
    let mut out = Vec::with_capacity(methods.len());
    for &m in methods {
        let est = match m {
            Method::Lasso => plain_lasso(&task, &cfg.oracle)?.coef,
            Method::Naive => naive_trans_lasso(&task, &cfg.oracle)?.coef,
            Method::Oracle => oracle_trans_lasso(&task, &informative, &cfg.oracle)?.beta.coef,
            Method::OracleL0 => {
                if informative.is_empty() {
                    plain_lasso(&task, &cfg.oracle)?.coef
                } else {
                    oracle_trans_lasso_l0(&task, &informative, &cfg.oracle)?.beta.coef
                }
            }
            Method::TransLasso => {
                let tc = TransLassoConfig {
                    seed,
                    ..cfg.trans.clone()
                };
                trans_lasso(&task, &tc)?.beta.coef
            }
        };
        out.push(sse(&est, &truth.beta));
    }
    // ranking statistic on the same dictionary half the adaptive method uses
    let (first, _) = split_primary(sc.n0, seed);
    let half = task.primary.select_rows(&first);
    let alpha = cfg.trans.t_star_exponents.first().copied().unwrap_or(0.75);
    let report = sparsity_report(&half, &task.auxiliaries, t_star_for(sc.n0, alpha), alpha)?;
    Ok(RepOutcome {
        sse: out,
        rank_hit: ranks_informative_first(&report.index, &informative),
    })
}

/// Runs `reps` independent replications (seed + rep index) in parallel.
pub fn run_replications(sc: &SimScenario, methods: &[Method], reps: usize, cfg: &SimMethodsConfig) -> Result<MetricTable> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let model = DesignModel::new(sc)?;
    let outcomes: Vec<Result<RepOutcome>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let seed = rep_seed(sc, rep);
            run_one(sc, &model, methods, cfg, seed).map_err(|e| Error::Replication {
                seed,
                source: Box::new(e),
            })
        })
        .collect();
    let mut sse = vec![Vec::with_capacity(reps); methods.len()];
    let mut rank_hits = Vec::with_capacity(reps);
    for o in outcomes {
        let o = o?;
        for (col, v) in sse.iter_mut().zip(o.sse) {
            col.push(v);
        }
        rank_hits.push(o.rank_hit);
    }
    Ok(MetricTable {
        scenario: sc.clone(),
        reps,
        methods: methods.to_vec(),
        sse,
        rank_hits,
    })
}
