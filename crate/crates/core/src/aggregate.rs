//! Q-aggregation of candidate coefficient vectors over the simplex.
//!
//! With `B` the matrix of candidates and `Q(b) = Σ_i (y_i − x_iᵀb)²` on the
//! hold-out rows, the weights minimize
//!
//! ```text
//! F(θ) = Q(Bθ) + Σ_l θ_l Q(b_l) + (2 λ_θ log(L+1) / n_0) ‖θ‖₁,   θ ∈ simplex
//! ```
//!
//! `F` is a convex quadratic in `θ`. It is minimized by accelerated projected
//! gradient with restarts, followed by an exact solve on the detected support.
//! The returned `gap` is the Frank–Wolfe certificate `max_l ∇F(θ)ᵀ(θ − e_l)`.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lasso::{fit_lasso, LassoConfig};

pub const TOL_AGG: f64 = 1e-8;
pub const MAX_ITER_AGG: usize = 50_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregationResult {
    pub theta: Vec<f64>,
    #[serde(skip)]
    pub beta: Array1<f64>,
    pub objective: f64,
    /// `Q(b_l)` for every candidate.
    pub holdout_errors: Vec<f64>,
    /// `Q` of the aggregated vector.
    pub aggregate_error: f64,
    /// `2 λ_θ log(L+1) / n_0`
    pub penalty: f64,
    pub lambda_theta: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// Quadratic data of `F`: `F(θ) = θᵀGθ − 2vᵀθ + yᵀy + (q + pen)ᵀθ` on the simplex.
struct QForm {
    gram: Array2<f64>,
    lin: Array1<f64>,
    yy: f64,
    q: Array1<f64>,
    pen: f64,
}

impl QForm {
    fn value(&self, theta: &Array1<f64>) -> f64 {
        theta.dot(&self.gram.dot(theta)) - 2.0 * self.lin.dot(theta) + self.yy + self.q.dot(theta) + self.pen * theta.sum()
    }

    fn grad(&self, theta: &Array1<f64>) -> Array1<f64> {
        2.0 * self.gram.dot(theta) - 2.0 * &self.lin + &self.q + self.pen
    }

    fn gap(&self, theta: &Array1<f64>) -> f64 {
        let g = self.grad(theta);
        let min = g.iter().copied().fold(f64::INFINITY, f64::min);
        g.dot(theta) - min
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &Array1<f64>) -> Array1<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    v.mapv(|x| (x - tau).max(0.0))
}

fn largest_eigenvalue(g: &Array2<f64>) -> f64 {
    let m = g.nrows();
    let mut v = Array1::from_elem(m, 1.0 / (m as f64).sqrt());
    let mut est = 0.0;
    for _ in 0..200 {
        let w = g.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - est).abs() <= 1e-12 * next.abs() {
            est = next;
            break;
        }
        est = next;
    }
    // Gershgorin bound caps any overshoot of the safety margin
    let gersh = g
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    (1.05 * est).min(gersh).max(est)
}

/// Minimizes the quadratic on the face spanned by `support`, returning the
/// full weight vector if the solution stays in the simplex.
fn solve_on_support(form: &QForm, support: &[usize]) -> Option<Array1<f64>> {
    let s = support.len();
    let rhs_lin = 2.0 * &form.lin - &form.q - form.pen;
    // [2G_SS 1; 1ᵀ 0] [θ; μ] = [2v − q − pen; 1]
    let mut kkt = DMatrix::<f64>::zeros(s + 1, s + 1);
    let mut rhs = DVector::<f64>::zeros(s + 1);
    for (a, &i) in support.iter().enumerate() {
        for (b, &j) in support.iter().enumerate() {
            kkt[(a, b)] = 2.0 * form.gram[[i, j]];
        }
        kkt[(a, s)] = 1.0;
        kkt[(s, a)] = 1.0;
        rhs[a] = rhs_lin[i];
    }
    rhs[s] = 1.0;
    let sol = kkt.lu().solve(&rhs)?;
    let mut theta = Array1::zeros(form.q.len());
    for (a, &i) in support.iter().enumerate() {
        let t = sol[a];
        if !t.is_finite() || t < 0.0 {
            return None;
        }
        theta[i] = t;
    }
    let total = theta.sum();
    if (total - 1.0).abs() > 1e-9 {
        return None;
    }
    Some(theta / total)
}

/// Q-aggregation of `candidates` on the hold-out rows. `n_primary` is the
/// primary sample size entering the penalty.
pub fn q_aggregate(
    candidates: &[Array1<f64>],
    x_holdout: ArrayView2<f64>,
    y_holdout: ArrayView1<f64>,
    lambda_theta: f64,
    n_primary: usize,
) -> Result<AggregationResult> {
    let m = candidates.len();
    if m == 0 {
        return Err(Error::InvalidArgument("no candidates to aggregate".into()));
    }
    let (nh, p) = x_holdout.dim();
    if nh == 0 || y_holdout.len() != nh {
        return Err(Error::DimensionMismatch(format!(
            "hold-out design is {nh} x {p}, response has {}",
            y_holdout.len()
        )));
    }
    for (l, c) in candidates.iter().enumerate() {
        if c.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "candidate {l} has length {}, expected {p}",
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("candidate {l} has non-finite entries")));
        }
    }
    if !(lambda_theta >= 0.0) || n_primary == 0 {
        return Err(Error::InvalidArgument("lambda_theta must be non-negative and n_0 positive".into()));
    }

    let mut bmat = Array2::<f64>::zeros((p, m));
    for (l, c) in candidates.iter().enumerate() {
        bmat.column_mut(l).assign(c);
    }
    let preds = x_holdout.dot(&bmat);
    let gram = preds.t().dot(&preds);
    let lin = preds.t().dot(&y_holdout);
    let yy = y_holdout.dot(&y_holdout);
    let q: Array1<f64> = (0..m)
        .map(|l| {
            let r = &y_holdout - &preds.column(l);
            r.dot(&r)
        })
        .collect();
    let pen = 2.0 * lambda_theta * ((m) as f64).ln() / n_primary as f64;
    let form = QForm { gram, lin, yy, q, pen };

    let (theta, iterations) = if m == 1 {
        (Array1::from_elem(1, 1.0), 0)
    } else {
        minimize(&form)
    };
    let beta = bmat.dot(&theta);
    let r = &y_holdout - &x_holdout.dot(&beta);
    Ok(AggregationResult {
        objective: form.value(&theta),
        gap: form.gap(&theta),
        theta: theta.to_vec(),
        beta,
        holdout_errors: form.q.to_vec(),
        aggregate_error: r.dot(&r),
        penalty: pen,
        lambda_theta,
        iterations,
    })
}

fn minimize(form: &QForm) -> (Array1<f64>, usize) {
    let m = form.q.len();
    let lip = 2.0 * largest_eigenvalue(&form.gram);
    // start from the best vertex
    let start = (0..m)
        .map(|l| {
            let mut e = Array1::zeros(m);
            e[l] = 1.0;
            e
        })
        .min_by(|a, b| form.value(a).total_cmp(&form.value(b)))
        .expect("non-empty");
    if lip <= 0.0 {
        return (start, 0);
    }
    let step = 1.0 / lip;
    let mut theta = start.clone();
    let mut momentum = start;
    let mut t = 1.0f64;
    let mut iterations = 0;
    while iterations < MAX_ITER_AGG {
        iterations += 1;
        let next = project_simplex(&(&momentum - &(form.grad(&momentum) * step)));
        if t > 1.0 && form.value(&next) > form.value(&theta) {
            // momentum overshot: restart from the last iterate
            momentum = theta.clone();
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        momentum = &next + &((&next - &theta) * ((t - 1.0) / t_next));
        theta = next;
        t = t_next;
        if iterations % 20 == 0 && form.gap(&theta) < TOL_AGG {
            break;
        }
    }
    // exact solve on the support found
    let support: Vec<usize> = (0..m).filter(|&l| theta[l] > 1e-10).collect();
    if let Some(exact) = solve_on_support(form, &support) {
        if form.gap(&exact) <= form.gap(&theta).max(TOL_AGG) && form.value(&exact) <= form.value(&theta) + 1e-12 {
            theta = exact;
        }
    }
    (theta, iterations)
}

/// Residual variance of a primary-only Lasso at `sqrt(2 log p / n)`, divided
/// by `max(n − |support|, 1)` and floored at `1e-12`.
pub fn estimate_noise_variance(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<f64> {
    let (n, p) = x.dim();
    let lambda = (2.0 * (p as f64).ln() / n as f64).sqrt();
    let fit = fit_lasso(x, y, &LassoConfig::new(lambda))?;
    let r = &y - &x.dot(&fit.coef);
    let dof = n.saturating_sub(fit.active_set.len()).max(1);
    Ok((r.dot(&r) / dof as f64).max(1e-12))
}
