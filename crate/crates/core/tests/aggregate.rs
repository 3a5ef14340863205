mod common;

use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::Exp1;
use translasso::aggregate::{estimate_noise_variance, q_aggregate, TOL_AGG};
use translasso::util::rng_from_seed;

use common::{normal_matrix, normal_vector};

/// Aggregation objective evaluated directly from its definition.
fn objective(cands: &[Array1<f64>], x: &Array2<f64>, y: &Array1<f64>, theta: &[f64], lambda: f64, n0: usize) -> f64 {
    let q = |b: &Array1<f64>| {
        let r = y - &x.dot(b);
        r.dot(&r)
    };
    let mut mix = Array1::zeros(x.ncols());
    for (t, c) in theta.iter().zip(cands) {
        mix = mix + c * *t;
    }
    let pen = 2.0 * lambda * (cands.len() as f64).ln() / n0 as f64;
    q(&mix)
        + theta.iter().zip(cands).map(|(t, c)| t * q(c)).sum::<f64>()
        + pen * theta.iter().map(|t| t.abs()).sum::<f64>()
}

fn random_instance(seed: u64, m: usize, p: usize, rows: usize) -> (Vec<Array1<f64>>, Array2<f64>, Array1<f64>) {
    let mut rng = rng_from_seed(seed);
    let cands = (0..m).map(|_| normal_vector(&mut rng, p)).collect();
    let x = normal_matrix(&mut rng, rows, p);
    let truth = normal_vector(&mut rng, p);
    let y = x.dot(&truth) + normal_vector(&mut rng, rows);
    (cands, x, y)
}

fn dirichlet(rng: &mut rand_chacha::ChaCha8Rng, m: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[test]
fn beats_vertices_and_random_search() {
    let (cands, x, y) = random_instance(3, 4, 4, 20);
    let r = q_aggregate(&cands, x.view(), y.view(), 1.0, 50).unwrap();
    let f = objective(&cands, &x, &y, &r.theta, 1.0, 50);
    assert!((f - r.objective).abs() < 1e-9 * f.abs().max(1.0));
    for l in 0..4 {
        let mut e = vec![0.0; 4];
        e[l] = 1.0;
        assert!(f <= objective(&cands, &x, &y, &e, 1.0, 50) + 1e-12);
    }
    let mut rng = rng_from_seed(99);
    for _ in 0..10_000 {
        let t = dirichlet(&mut rng, 4);
        assert!(f <= objective(&cands, &x, &y, &t, 1.0, 50) + 1e-6);
    }
    assert!(r.gap < TOL_AGG);
}

#[test]
fn concentrates_on_exact_candidate() {
    let mut rng = rng_from_seed(4);
    let beta = normal_vector(&mut rng, 5);
    let far = &beta + 3.0;
    let x = normal_matrix(&mut rng, 30, 5);
    let y = x.dot(&beta);
    let cands = vec![beta.clone(), far];
    let r = q_aggregate(&cands, x.view(), y.view(), 1.0, 60).unwrap();
    assert!(r.theta[0] >= 0.99, "theta = {:?}", r.theta);
    // dense grid over the segment
    let best = (0..=10_000)
        .map(|i| {
            let t = i as f64 / 10_000.0;
            objective(&cands, &x, &y, &[t, 1.0 - t], 1.0, 60)
        })
        .fold(f64::INFINITY, f64::min);
    assert!(r.objective <= best + 1e-9);
}

#[test]
fn penalty_level_does_not_move_weights() {
    for seed in 0..10 {
        let (cands, x, y) = random_instance(100 + seed, 5, 6, 25);
        let a = q_aggregate(&cands, x.view(), y.view(), 1.0, 40).unwrap();
        let b = q_aggregate(&cands, x.view(), y.view(), 10.0, 40).unwrap();
        for (u, v) in a.theta.iter().zip(&b.theta) {
            assert!((u - v).abs() < 1e-6);
        }
    }
}

#[test]
fn noise_estimate_on_pure_noise() {
    let mut inside = 0;
    for rep in 0..100 {
        let mut rng = rng_from_seed(500 + rep);
        let x = normal_matrix(&mut rng, 200, 10);
        let y = normal_vector(&mut rng, 200);
        let v = estimate_noise_variance(x.view(), y.view()).unwrap();
        if (0.7..=1.3).contains(&v) {
            inside += 1;
        }
    }
    assert!(inside >= 90, "{inside}/100 estimates in [0.7, 1.3]");
}

#[test]
fn noise_estimate_without_noise() {
    let mut rng = rng_from_seed(6);
    let x = normal_matrix(&mut rng, 50, 5);
    let beta = Array1::from(vec![2.0, -1.0, 0.5, 3.0, -2.5]);
    let y = x.dot(&beta);
    let v = estimate_noise_variance(x.view(), y.view()).unwrap();
    assert!(v > 0.0);
    // the Lasso shrinks every coefficient by O(λ), leaving a small residual
    let lam = (2.0 * 5f64.ln() / 50.0).sqrt();
    assert!(v < 5.0 * lam * lam, "{v}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn weights_on_simplex_and_coefficients_contained(seed in 0u64..100_000, m in 1usize..7, rows in 3usize..30) {
        let (cands, x, y) = random_instance(seed, m, 4, rows);
        let r = q_aggregate(&cands, x.view(), y.view(), 2.0, 30).unwrap();
        prop_assert!((r.theta.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(r.theta.iter().all(|&t| t >= 0.0));
        for j in 0..4 {
            let lo = cands.iter().map(|c| c[j]).fold(f64::INFINITY, f64::min);
            let hi = cands.iter().map(|c| c[j]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(r.beta[j] >= lo - 1e-12 && r.beta[j] <= hi + 1e-12);
        }
        let best = r.holdout_errors.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(r.aggregate_error <= best + r.penalty + TOL_AGG);
        prop_assert!(r.gap < TOL_AGG * r.objective.abs().max(1.0));
    }
}
