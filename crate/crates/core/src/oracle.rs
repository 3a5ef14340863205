//! Transfer estimators for a known informative set.
//!
//! [`oracle_trans_lasso`] pools the primary study with the informative
//! auxiliaries, fits a Lasso, then corrects the pooled fit on the primary
//! sample alone. [`oracle_trans_lasso_l0`] instead estimates every contrast
//! separately from cross-moment differences and refits on bias-corrected
//! responses.

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{stack_rows, stacked_gram, Study, TaskData};
use crate::error::{Error, Result};
use crate::lasso::{
    cv_lambda, default_lambda_grid, fit_lasso, fit_lasso_quadratic, FitResult, LassoConfig, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastMode {
    L1,
    L0,
}

/// Penalty rule for the pooled step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PooledPenalty {
    /// `sqrt(2 log p / (n_0 + n_A))`
    Auto,
    /// `Auto` times the largest plug-in response scale `sqrt(‖y_k‖² / n_k)`.
    AutoMoment,
    Fixed(f64),
    /// Cross-validated on the pooled sample.
    Cv,
}

/// Penalty rule for the primary-sample correction step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionPenalty {
    /// `sqrt(2 log p / n_0)`
    Auto,
    /// `Auto` times `sqrt(‖y_0‖² / n_0)`.
    AutoMoment,
    Fixed(f64),
    /// `λ_w * sqrt((n_0 + n_A) / n_0)`
    CvScaled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub lambda_w: PooledPenalty,
    pub lambda_delta: CorrectionPenalty,
    pub contrast_mode: ContrastMode,
    /// ℓ0 mode: one penalty per informative study, in ascending index order.
    pub per_contrast_lambdas: Option<Vec<f64>>,
    /// ℓ0 mode: penalty of the refit step.
    pub lambda_beta: Option<f64>,
    pub cv_folds: usize,
    pub cv_seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            lambda_w: PooledPenalty::Auto,
            lambda_delta: CorrectionPenalty::Auto,
            contrast_mode: ContrastMode::L1,
            per_contrast_lambdas: None,
            lambda_beta: None,
            cv_folds: 8,
            cv_seed: 0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl OracleConfig {
    pub fn fixed(lambda_w: f64, lambda_delta: f64) -> Self {
        OracleConfig {
            lambda_w: PooledPenalty::Fixed(lambda_w),
            lambda_delta: CorrectionPenalty::Fixed(lambda_delta),
            ..Default::default()
        }
    }

    pub fn cv_scaled(folds: usize, seed: u64) -> Self {
        OracleConfig {
            lambda_w: PooledPenalty::Cv,
            lambda_delta: CorrectionPenalty::CvScaled,
            cv_folds: folds,
            cv_seed: seed,
            ..Default::default()
        }
    }

    fn lasso(&self, lambda: f64) -> LassoConfig {
        LassoConfig {
            lambda,
            max_iter: self.max_iter,
            tol: self.tol,
            warm_start: None,
        }
    }
}

fn universal(p: usize, n: usize) -> Result<f64> {
    let v = (2.0 * (p as f64).ln() / n as f64).sqrt();
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!(
            "automatic penalty is not positive for p = {p}, n = {n}"
        )))
    }
}

fn response_scale(s: &Study) -> f64 {
    (s.y.dot(&s.y) / s.n() as f64).sqrt()
}

/// Penalty of the pooled step over `studies` (primary first).
pub fn resolve_lambda_w(studies: &[&Study], cfg: &OracleConfig) -> Result<f64> {
    let p = studies[0].p();
    let total: usize = studies.iter().map(|s| s.n()).sum();
    match cfg.lambda_w {
        PooledPenalty::Auto => universal(p, total),
        PooledPenalty::AutoMoment => {
            let m = studies.iter().map(|s| response_scale(s)).fold(0.0, f64::max);
            Ok(universal(p, total)? * m)
        }
        PooledPenalty::Fixed(v) => Ok(v),
        PooledPenalty::Cv => {
            let (x, y) = stack_rows(studies, None)?;
            let grid = default_lambda_grid(x.view(), y.view(), 50, 1e-3);
            cv_lambda(x.view(), y.view(), cfg.cv_folds, &grid, cfg.cv_seed)
        }
    }
}

/// Penalty of the correction step given the pooled penalty.
pub fn resolve_lambda_delta(primary: &Study, pooled_rows: usize, lambda_w: f64, cfg: &OracleConfig) -> Result<f64> {
    let n0 = primary.n();
    match cfg.lambda_delta {
        CorrectionPenalty::Auto => universal(primary.p(), n0),
        CorrectionPenalty::AutoMoment => Ok(universal(primary.p(), n0)? * response_scale(primary)),
        CorrectionPenalty::Fixed(v) => Ok(v),
        CorrectionPenalty::CvScaled => Ok(lambda_w * (pooled_rows as f64 / n0 as f64).sqrt()),
    }
}

/// Output of the two-step estimator; `beta.coef == w.coef + delta.coef`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleFit {
    pub beta: FitResult,
    pub w: FitResult,
    pub delta: FitResult,
    /// Canonical (sorted) auxiliary positions used.
    pub informative: Vec<usize>,
}

/// Two-step transfer Lasso on a declared informative set (auxiliary
/// positions, 0-based). With an empty set this is the primary-only Lasso at
/// the pooled penalty, and the correction is identically zero.
pub fn oracle_trans_lasso(task: &TaskData, informative: &[usize], cfg: &OracleConfig) -> Result<OracleFit> {
    if cfg.contrast_mode != ContrastMode::L1 {
        return Err(Error::InvalidArgument(
            "oracle_trans_lasso requires l1 contrast mode".into(),
        ));
    }
    let set = task.canonical_set(informative)?;
    let studies = task.pooled_studies(&set)?;
    let lambda_w = resolve_lambda_w(&studies, cfg)?;
    let primary = &task.primary;
    let p = task.p();

    if set.is_empty() {
        let fit = fit_lasso(primary.x.view(), primary.y.view(), &cfg.lasso(lambda_w))?;
        return Ok(OracleFit {
            beta: fit.clone(),
            w: fit,
            delta: FitResult::zeros(p, 0.0),
            informative: set,
        });
    }

    let (x, y) = stack_rows(&studies, None)?;
    let w = fit_lasso(x.view(), y.view(), &cfg.lasso(lambda_w))?;
    let lambda_delta = resolve_lambda_delta(primary, x.nrows(), lambda_w, cfg)?;
    let offset_y = &primary.y - &primary.x.dot(&w.coef);
    let delta = fit_lasso(primary.x.view(), offset_y.view(), &cfg.lasso(lambda_delta))?;
    let coef = &w.coef + &delta.coef;
    let mut beta = FitResult::from_coef(coef, delta.objective, lambda_delta);
    beta.iterations = w.iterations + delta.iterations;
    beta.converged = w.converged && delta.converged;
    Ok(OracleFit {
        beta,
        w,
        delta,
        informative: set,
    })
}

/// Output of the exact-sparse-contrast variant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleL0Fit {
    pub beta: FitResult,
    /// One contrast per informative study, ascending index order.
    pub deltas: Vec<FitResult>,
    pub informative: Vec<usize>,
}

/// Default contrast penalty `(‖y_k‖/n_k + ‖y_0‖/n_0) sqrt(2 log p)`.
pub fn default_contrast_lambda(aux: &Study, primary: &Study) -> f64 {
    let scale = aux.y.dot(&aux.y).sqrt() / aux.n() as f64 + primary.y.dot(&primary.y).sqrt() / primary.n() as f64;
    scale * (2.0 * (primary.p() as f64).ln()).sqrt()
}

/// Exact-sparse-contrast transfer estimator on a non-empty informative set.
pub fn oracle_trans_lasso_l0(task: &TaskData, informative: &[usize], cfg: &OracleConfig) -> Result<OracleL0Fit> {
    let set = task.canonical_set(informative)?;
    if set.is_empty() {
        return Err(Error::InvalidArgument(
            "the l0 variant needs a non-empty informative set".into(),
        ));
    }
    if let Some(l) = &cfg.per_contrast_lambdas {
        if l.len() != set.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} contrast penalties for {} informative studies",
                l.len(),
                set.len()
            )));
        }
    }
    let primary = &task.primary;
    let studies = task.pooled_studies(&set)?;
    let (gram, _) = stacked_gram(&studies)?;
    let c0 = primary.cross_moment();

    let deltas: Vec<FitResult> = set
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            let aux = &task.auxiliaries[k];
            let lin = &aux.cross_moment() - &c0;
            let lambda = match &cfg.per_contrast_lambdas {
                Some(l) => l[i],
                None => default_contrast_lambda(aux, primary),
            };
            fit_lasso_quadratic(gram.view(), lin.view(), &cfg.lasso(lambda))
        })
        .collect::<Result<_>>()?;

    let mut offsets: Vec<Array1<f64>> = Vec::with_capacity(studies.len());
    offsets.push(Array1::zeros(primary.n()));
    for (&k, d) in set.iter().zip(&deltas) {
        offsets.push(task.auxiliaries[k].x.dot(&d.coef));
    }
    let (x, y) = stack_rows(&studies, Some(&offsets))?;
    let lambda_beta = match cfg.lambda_beta {
        Some(v) => v,
        None => universal(task.p(), x.nrows())?,
    };
    let beta = fit_lasso(x.view(), y.view(), &cfg.lasso(lambda_beta))?;
    Ok(OracleL0Fit {
        beta,
        deltas,
        informative: set,
    })
}
