#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use translasso::data::{Study, StudyKind, TaskData};

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.sample(StandardNormal))
}

pub fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.sample(StandardNormal))
}

pub fn study(id: &str, x: Array2<f64>, y: Array1<f64>, kind: StudyKind) -> Study {
    Study::new(id, x, y, kind).expect("valid study")
}

/// Primary plus auxiliaries drawn with `y = X w + noise · ε`.
pub fn linear_task(
    rng: &mut ChaCha8Rng,
    beta: &Array1<f64>,
    n0: usize,
    aux: &[(usize, Array1<f64>)],
    noise: f64,
) -> TaskData {
    let p = beta.len();
    let draw = |rng: &mut ChaCha8Rng, n: usize, w: &Array1<f64>| {
        let x = normal_matrix(rng, n, p);
        let y = x.dot(w) + normal_vector(rng, n) * noise;
        (x, y)
    };
    let (x0, y0) = draw(rng, n0, beta);
    let primary = study("primary", x0, y0, StudyKind::Primary);
    let auxiliaries = aux
        .iter()
        .enumerate()
        .map(|(k, (n, w))| {
            let (x, y) = draw(rng, *n, w);
            study(&format!("aux{}", k + 1), x, y, StudyKind::Auxiliary)
        })
        .collect();
    TaskData::new(primary, auxiliaries).expect("valid task")
}

fn objective(x: ArrayView2<f64>, y: ArrayView1<f64>, b: &Array1<f64>, lambda: f64) -> f64 {
    let r = &y - &x.dot(b);
    r.dot(&r) / (2.0 * x.nrows() as f64) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
}

/// Exhaustive search over sign patterns `s ∈ {−1, 0, 1}^p`: for each pattern
/// solve the stationarity equations on its support and keep solutions whose
/// signs agree and whose inactive coordinates satisfy the subgradient bound.
/// Returns the feasible solution of smallest objective.
pub fn sign_pattern_lasso(x: ArrayView2<f64>, y: ArrayView1<f64>, lambda: f64) -> Array1<f64> {
    let (n, p) = x.dim();
    let nf = n as f64;
    let gram = x.t().dot(&x) / nf;
    let xty = x.t().dot(&y) / nf;
    let mut best: Option<(f64, Array1<f64>)> = None;
    let total = 3usize.pow(p as u32);
    for code in 0..total {
        let mut signs = vec![0i32; p];
        let mut c = code;
        for s in signs.iter_mut() {
            *s = (c % 3) as i32 - 1;
            c /= 3;
        }
        let active: Vec<usize> = (0..p).filter(|&j| signs[j] != 0).collect();
        let mut b = Array1::<f64>::zeros(p);
        if !active.is_empty() {
            let m = active.len();
            let g = DMatrix::from_fn(m, m, |a, c| gram[[active[a], active[c]]]);
            let rhs = DVector::from_fn(m, |a, _| xty[active[a]] - lambda * signs[active[a]] as f64);
            let Some(sol) = g.lu().solve(&rhs) else { continue };
            if active.iter().enumerate().any(|(a, &j)| sol[a] * signs[j] as f64 <= 0.0) {
                continue;
            }
            for (a, &j) in active.iter().enumerate() {
                b[j] = sol[a];
            }
        }
        let grad = &xty - &gram.dot(&b);
        let ok = (0..p)
            .filter(|&j| signs[j] == 0)
            .all(|j| grad[j].abs() <= lambda * (1.0 + 1e-10) + 1e-12);
        if !ok {
            continue;
        }
        let f = objective(x, y, &b, lambda);
        if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
            best = Some((f, b));
        }
    }
    best.expect("some sign pattern is optimal").1
}

pub fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

pub fn sq_dist(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum()
}
