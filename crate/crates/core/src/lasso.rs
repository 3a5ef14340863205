//! ℓ1-penalized least squares by cyclic coordinate descent.
//!
//! Two entry points share the same update rule: [`fit_lasso`] works on a
//! design matrix and keeps a residual vector, [`fit_lasso_quadratic`] works on
//! a precomputed Gram matrix and keeps the gradient. Both alternate a full
//! sweep over all coordinates with sweeps restricted to the current support,
//! and stop once a full sweep moves no coefficient by more than `tol`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::util::seeded_permutation;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug)]
pub struct LassoConfig {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub warm_start: Option<Array1<f64>>,
}

impl LassoConfig {
    pub fn new(lambda: f64) -> Self {
        LassoConfig {
            lambda,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            warm_start: None,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_warm_start(mut self, start: Array1<f64>) -> Self {
        self.warm_start = Some(start);
        self
    }

    fn validate(&self, p: usize) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if let Some(w) = &self.warm_start {
            if w.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "warm start has length {}, expected {}",
                    w.len(),
                    p
                )));
            }
        }
        Ok(())
    }
}

/// A fitted coefficient vector with solver diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub coef: Array1<f64>,
    pub objective: f64,
    /// Number of coordinate sweeps (full or support-restricted).
    pub iterations: usize,
    pub active_set: Vec<usize>,
    pub lambda: f64,
    pub converged: bool,
    /// Objective after every sweep.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl FitResult {
    /// A zero fit, used where an estimator component is absent.
    pub fn zeros(p: usize, lambda: f64) -> Self {
        FitResult {
            coef: Array1::zeros(p),
            objective: 0.0,
            iterations: 0,
            active_set: Vec::new(),
            lambda,
            converged: true,
            trace: Vec::new(),
        }
    }

    pub(crate) fn from_coef(coef: Array1<f64>, objective: f64, lambda: f64) -> Self {
        let active_set = support(coef.view());
        FitResult {
            coef,
            objective,
            iterations: 0,
            active_set,
            lambda,
            converged: true,
            trace: Vec::new(),
        }
    }
}

pub fn support(coef: ArrayView1<f64>) -> Vec<usize> {
    coef.iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// `sign(z) * max(|z| - t, 0)`.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = 4 * i;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|b| b.abs()).sum()
}

/// One coordinate-wise separable problem: smooth convex part plus `λ‖b‖₁`.
trait CoordinateProblem {
    fn dim(&self) -> usize;
    fn coef(&self) -> &[f64];
    /// Exact minimization along coordinate `j`; returns the absolute change.
    fn update(&mut self, j: usize, lambda: f64) -> f64;
    fn objective(&self, lambda: f64) -> f64;
}

fn push_trace(trace: &mut Vec<f64>, value: f64) {
    debug_assert!(
        trace
            .last()
            .map_or(true, |&prev| value <= prev + 1e-10 * (1.0 + prev.abs())),
        "coordinate descent objective increased: {:?} -> {}",
        trace.last(),
        value
    );
    trace.push(value);
}

/// Alternates full sweeps with sweeps over the current support. Converged
/// once a full sweep changes no coordinate by `tol` or more.
fn descend<P: CoordinateProblem>(prob: &mut P, cfg: &LassoConfig) -> (usize, bool, Vec<f64>) {
    let lambda = cfg.lambda;
    let p = prob.dim();
    let mut iterations = 0;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut active = Vec::with_capacity(p);
    while iterations < cfg.max_iter {
        let mut change = 0.0f64;
        for j in 0..p {
            change = change.max(prob.update(j, lambda));
        }
        iterations += 1;
        push_trace(&mut trace, prob.objective(lambda));
        if change < cfg.tol {
            converged = true;
            break;
        }
        while iterations < cfg.max_iter {
            active.clear();
            active.extend((0..p).filter(|&j| prob.coef()[j] != 0.0));
            let mut change = 0.0f64;
            for &j in &active {
                change = change.max(prob.update(j, lambda));
            }
            iterations += 1;
            push_trace(&mut trace, prob.objective(lambda));
            if change < cfg.tol {
                break;
            }
        }
    }
    (iterations, converged, trace)
}

struct DesignProblem {
    /// Column `j` of X stored contiguously as row `j`.
    cols: Array2<f64>,
    /// `‖X_j‖² / n`
    col_sq: Vec<f64>,
    resid: Vec<f64>,
    coef: Vec<f64>,
    inv_n: f64,
}

impl CoordinateProblem for DesignProblem {
    fn dim(&self) -> usize {
        self.coef.len()
    }

    fn coef(&self) -> &[f64] {
        &self.coef
    }

    #[inline]
    fn update(&mut self, j: usize, lambda: f64) -> f64 {
        let sq = self.col_sq[j];
        let old = self.coef[j];
        if sq == 0.0 {
            self.coef[j] = 0.0;
            return old.abs();
        }
        let col = self.cols.row(j);
        let col = col.as_slice().expect("contiguous column");
        let z = dot(col, &self.resid) * self.inv_n + sq * old;
        let new = soft_threshold(z, lambda) / sq;
        let diff = new - old;
        if diff != 0.0 {
            axpy(-diff, col, &mut self.resid);
            self.coef[j] = new;
        }
        diff.abs()
    }

    fn objective(&self, lambda: f64) -> f64 {
        0.5 * self.inv_n * dot(&self.resid, &self.resid) + lambda * l1(&self.coef)
    }
}

fn check_finite(name: &str, v: impl IntoIterator<Item = f64>) -> Result<()> {
    if v.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} contains non-finite values")))
    }
}

/// Minimizes `(1/2n)‖y − Xb‖² + λ‖b‖₁`. No intercept is fitted.
///
/// Non-convergence within `max_iter` sweeps is reported through
/// [`FitResult::converged`], not as an error.
pub fn fit_lasso(x: ArrayView2<f64>, y: ArrayView1<f64>, cfg: &LassoConfig) -> Result<FitResult> {
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "design has {n} rows, response has {}",
            y.len()
        )));
    }
    if n == 0 || p == 0 {
        return Err(Error::DimensionMismatch(format!("empty design ({n} x {p})")));
    }
    cfg.validate(p)?;
    let cols = x.t().as_standard_layout().into_owned();
    let inv_n = 1.0 / n as f64;
    let col_sq = cols
        .axis_iter(Axis(0))
        .map(|c| {
            let c = c.as_slice().expect("contiguous column");
            dot(c, c) * inv_n
        })
        .collect();
    let coef: Vec<f64> = match &cfg.warm_start {
        Some(w) => w.to_vec(),
        None => vec![0.0; p],
    };
    check_finite("warm start", coef.iter().copied())?;
    let mut resid = y.to_vec();
    for (j, &b) in coef.iter().enumerate() {
        if b != 0.0 {
            let col = cols.row(j);
            axpy(-b, col.as_slice().expect("contiguous column"), &mut resid);
        }
    }
    let mut prob = DesignProblem {
        cols,
        col_sq,
        resid,
        coef,
        inv_n,
    };
    let (iterations, converged, trace) = descend(&mut prob, cfg);
    let objective = prob.objective(cfg.lambda);
    let coef = Array1::from(prob.coef);
    Ok(FitResult {
        active_set: support(coef.view()),
        coef,
        objective,
        iterations,
        lambda: cfg.lambda,
        converged,
        trace,
    })
}

/// Objective `(1/2n)‖y − Xb‖² + λ‖b‖₁` evaluated directly.
pub fn lasso_objective(x: ArrayView2<f64>, y: ArrayView1<f64>, coef: ArrayView1<f64>, lambda: f64) -> f64 {
    let r = &y - &x.dot(&coef);
    0.5 * r.dot(&r) / x.nrows() as f64 + lambda * coef.iter().map(|b| b.abs()).sum::<f64>()
}

fn kkt_from_gradient(grad: ArrayView1<f64>, coef: ArrayView1<f64>, lambda: f64) -> f64 {
    // `grad` is the negative gradient of the smooth part
    grad.iter()
        .zip(coef.iter())
        .map(|(&g, &b)| {
            if b == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Largest violation of the Lasso subgradient optimality conditions.
pub fn kkt_violation(x: ArrayView2<f64>, y: ArrayView1<f64>, coef: ArrayView1<f64>, lambda: f64) -> f64 {
    let r = &y - &x.dot(&coef);
    let grad = x.t().dot(&r) / x.nrows() as f64;
    kkt_from_gradient(grad.view(), coef, lambda)
}

struct QuadraticProblem<'a> {
    sigma: ArrayView2<'a, f64>,
    c: ArrayView1<'a, f64>,
    /// `Σδ − c`
    grad: Vec<f64>,
    coef: Vec<f64>,
}

impl CoordinateProblem for QuadraticProblem<'_> {
    fn dim(&self) -> usize {
        self.coef.len()
    }

    fn coef(&self) -> &[f64] {
        &self.coef
    }

    #[inline]
    fn update(&mut self, j: usize, lambda: f64) -> f64 {
        let d = self.sigma[[j, j]];
        let old = self.coef[j];
        let z = d * old - self.grad[j];
        let new = soft_threshold(z, lambda) / d;
        let diff = new - old;
        if diff != 0.0 {
            let row = self.sigma.row(j);
            match row.as_slice() {
                Some(r) => axpy(diff, r, &mut self.grad),
                None => {
                    for (g, s) in self.grad.iter_mut().zip(row.iter()) {
                        *g += diff * s;
                    }
                }
            }
            self.coef[j] = new;
        }
        diff.abs()
    }

    fn objective(&self, lambda: f64) -> f64 {
        // ½δᵀΣδ − δᵀc = ½δᵀ(Σδ − c) − ½δᵀc
        let dg = dot(&self.coef, &self.grad);
        let dc: f64 = self.coef.iter().zip(self.c.iter()).map(|(a, b)| a * b).sum();
        0.5 * dg - 0.5 * dc + lambda * l1(&self.coef)
    }
}

/// Minimizes `½δᵀΣδ − δᵀc + λ‖δ‖₁` for a symmetric positive semidefinite `Σ`.
pub fn fit_lasso_quadratic(sigma: ArrayView2<f64>, c: ArrayView1<f64>, cfg: &LassoConfig) -> Result<FitResult> {
    let p = c.len();
    if sigma.dim() != (p, p) {
        return Err(Error::DimensionMismatch(format!(
            "quadratic form is {:?}, linear term has length {p}",
            sigma.dim()
        )));
    }
    if p == 0 {
        return Err(Error::DimensionMismatch("empty quadratic problem".into()));
    }
    cfg.validate(p)?;
    if let Some(j) = (0..p).find(|&j| !(sigma[[j, j]] > 0.0)) {
        return Err(Error::ZeroDiagonal(j));
    }
    check_finite("quadratic form", sigma.iter().copied())?;
    check_finite("linear term", c.iter().copied())?;
    let sigma = sigma.as_standard_layout();
    let coef: Vec<f64> = match &cfg.warm_start {
        Some(w) => w.to_vec(),
        None => vec![0.0; p],
    };
    let grad = (&sigma.dot(&Array1::from(coef.clone())) - &c).to_vec();
    let mut prob = QuadraticProblem {
        sigma: sigma.view(),
        c,
        grad,
        coef,
    };
    let (iterations, converged, trace) = descend(&mut prob, cfg);
    let objective = prob.objective(cfg.lambda);
    let coef = Array1::from(prob.coef);
    Ok(FitResult {
        active_set: support(coef.view()),
        coef,
        objective,
        iterations,
        lambda: cfg.lambda,
        converged,
        trace,
    })
}

/// Optimality violation for the quadratic form; the gradient is `Σδ − c`.
pub fn kkt_violation_quadratic(
    sigma: ArrayView2<f64>,
    c: ArrayView1<f64>,
    coef: ArrayView1<f64>,
    lambda: f64,
) -> f64 {
    let neg_grad = &c - &sigma.dot(&coef);
    kkt_from_gradient(neg_grad.view(), coef, lambda)
}

/// `‖Xᵀy / n‖_∞`, the smallest penalty giving the all-zero solution.
pub fn lambda_max(x: ArrayView2<f64>, y: ArrayView1<f64>) -> f64 {
    let g = x.t().dot(&y) / x.nrows() as f64;
    g.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `len` log-spaced penalties from `lambda_max` down to `ratio * lambda_max`.
pub fn default_lambda_grid(x: ArrayView2<f64>, y: ArrayView1<f64>, len: usize, ratio: f64) -> Vec<f64> {
    let top = lambda_max(x, y);
    if top == 0.0 || len <= 1 {
        return vec![top];
    }
    let (hi, lo) = (top.ln(), (top * ratio).ln());
    (0..len)
        .map(|i| (hi + (lo - hi) * i as f64 / (len - 1) as f64).exp())
        .collect()
}

/// Held-out errors along a penalty grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvCurve {
    pub grid: Vec<f64>,
    /// Mean over folds of the per-fold mean squared prediction error.
    pub mean_errors: Vec<f64>,
    pub best_index: usize,
}

impl CvCurve {
    pub fn best_lambda(&self) -> f64 {
        self.grid[self.best_index]
    }
}

/// k-fold cross-validation over a decreasing penalty grid. Folds come from a
/// seeded permutation; warm starts are carried down the grid within a fold.
pub fn cv_curve(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    folds: usize,
    grid: &[f64],
    seed: u64,
) -> Result<CvCurve> {
    let n = x.nrows();
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {folds}")));
    }
    if n < folds {
        return Err(Error::InvalidArgument(format!("{n} rows cannot be split into {folds} folds")));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("design has {n} rows, response has {}", y.len())));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty penalty grid".into()));
    }
    if grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("penalty grid must be sorted decreasing".into()));
    }
    let perm = seeded_permutation(n, seed);
    let assignment = fold_assignment(&perm, folds);
    let per_fold: Vec<Result<Vec<f64>>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == f).collect();
            let xt = x.select(Axis(0), &train);
            let yt = y.select(Axis(0), &train);
            let xh = x.select(Axis(0), &test);
            let yh = y.select(Axis(0), &test);
            let mut warm: Option<Array1<f64>> = None;
            let mut errs = Vec::with_capacity(grid.len());
            for &lam in grid {
                let mut cfg = LassoConfig::new(lam);
                cfg.warm_start = warm.take();
                let fit = fit_lasso(xt.view(), yt.view(), &cfg)?;
                let r = &yh - &xh.dot(&fit.coef);
                errs.push(r.dot(&r) / test.len() as f64);
                warm = Some(fit.coef);
            }
            Ok(errs)
        })
        .collect();
    let mut mean_errors = vec![0.0; grid.len()];
    for fold in per_fold {
        for (m, e) in mean_errors.iter_mut().zip(fold?) {
            *m += e;
        }
    }
    for m in &mut mean_errors {
        *m /= folds as f64;
    }
    let best_index = mean_errors
        .iter()
        .enumerate()
        .fold(0, |best, (i, &e)| if e < mean_errors[best] { i } else { best });
    Ok(CvCurve {
        grid: grid.to_vec(),
        mean_errors,
        best_index,
    })
}

/// Grid penalty with the smallest cross-validated error (first one on ties).
pub fn cv_lambda(x: ArrayView2<f64>, y: ArrayView1<f64>, folds: usize, grid: &[f64], seed: u64) -> Result<f64> {
    Ok(cv_curve(x, y, folds, grid, seed)?.best_lambda())
}

/// Fold label for each row: row `perm[i]` goes to fold `i mod folds`.
pub fn fold_assignment(perm: &[usize], folds: usize) -> Vec<usize> {
    let mut out = vec![0; perm.len()];
    for (i, &row) in perm.iter().enumerate() {
        out[row] = i % folds;
    }
    out
}
