mod common;

use ndarray::Array1;
use translasso::data::{StudyKind, TaskData};
use translasso::lasso::{fit_lasso, LassoConfig};
use translasso::oracle::OracleConfig;
use translasso::pipeline::{naive_trans_lasso, plain_lasso, split_primary, trans_lasso, TransLassoConfig};
use translasso::sim::{run_replications, CoefConfig, Method, SimMethodsConfig, SimScenario};
use translasso::util::rng_from_seed;
use translasso::aggregate::TOL_AGG;

use common::{linear_task, sq_dist, study};

fn beta30() -> Array1<f64> {
    let mut b = Array1::zeros(30);
    b[0] = 1.0;
    b[4] = -1.5;
    b[11] = 0.8;
    b
}

#[test]
fn no_auxiliaries_averages_half_sample_lassos() {
    let mut rng = rng_from_seed(1);
    let task = linear_task(&mut rng, &beta30(), 41, &[], 1.0);
    let cfg = TransLassoConfig {
        seed: 17,
        ..Default::default()
    };
    let fit = trans_lasso(&task, &cfg).unwrap();
    let (a, b) = split_primary(41, 17);
    let half = |rows: &[usize]| {
        let s = task.primary.select_rows(rows);
        let lam = (2.0 * 30f64.ln() / rows.len() as f64).sqrt();
        fit_lasso(s.x.view(), s.y.view(), &LassoConfig::new(lam)).unwrap().coef
    };
    let expected = (&half(&a) + &half(&b)) / 2.0;
    assert_eq!(fit.beta.coef, expected);
    for h in &fit.halves {
        assert_eq!(h.candidates.sets, vec![Vec::<usize>::new()]);
        assert_eq!(h.aggregation.theta, vec![1.0]);
    }
}

#[test]
fn copies_of_primary_give_ideal_transfer() {
    let beta = beta30();
    let mut rng = rng_from_seed(2);
    let base = linear_task(&mut rng, &beta, 40, &[], 0.0);
    let aux = (1..=3)
        .map(|k| study(&format!("copy{k}"), base.primary.x.clone(), base.primary.y.clone(), StudyKind::Auxiliary))
        .collect();
    let task = TaskData::new(base.primary.clone(), aux).unwrap();
    let cfg = TransLassoConfig {
        oracle: OracleConfig {
            tol: 1e-10,
            ..OracleConfig::fixed(1e-4, 1e-4)
        },
        ..Default::default()
    };
    let fit = trans_lasso(&task, &cfg).unwrap();
    assert!(sq_dist(&fit.beta.coef, &beta).sqrt() < 1e-2);
}

#[test]
fn same_seed_same_output_across_thread_counts() {
    let sc = SimScenario {
        p: 120,
        k: 6,
        informative: 3,
        seed: 9,
        ..Default::default()
    };
    let (task, _) = translasso::sim::gen_task(&sc).unwrap();
    let cfg = TransLassoConfig {
        seed: 5,
        ..Default::default()
    };
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(|| trans_lasso(&task, &cfg).unwrap());
    let four = pool(4).install(|| trans_lasso(&task, &cfg).unwrap());
    let again = trans_lasso(&task, &cfg).unwrap();
    assert_eq!(one, four);
    assert_eq!(one, again);
    let other = trans_lasso(&task, &TransLassoConfig { seed: 6, ..cfg }).unwrap();
    assert_ne!(one.beta.coef, other.beta.coef);
}

#[test]
fn diagnostics_cover_every_nested_set() {
    let sc = SimScenario {
        p: 100,
        k: 5,
        informative: 2,
        seed: 3,
        ..Default::default()
    };
    let (task, _) = translasso::sim::gen_task(&sc).unwrap();
    let fit = trans_lasso(&task, &TransLassoConfig::default()).unwrap();
    assert_eq!(fit.halves.len(), 2);
    for h in &fit.halves {
        assert_eq!(h.candidates.len(), 6);
        assert!(h.candidates.sets[0].is_empty());
        assert_eq!(h.candidates.sets[5], vec![0, 1, 2, 3, 4]);
        assert_eq!(h.dictionary_rows.len() + h.holdout_rows.len(), 150);
        // never worse than the primary-only candidate beyond the penalty term
        let a = &h.aggregation;
        assert!(a.aggregate_error <= a.holdout_errors[0] + a.penalty + TOL_AGG);
    }
}

#[test]
fn extra_exponents_add_candidates() {
    let sc = SimScenario {
        p: 100,
        k: 5,
        informative: 2,
        seed: 4,
        ..Default::default()
    };
    let (task, _) = translasso::sim::gen_task(&sc).unwrap();
    let cfg = TransLassoConfig {
        t_star_exponents: vec![0.75, 0.5],
        ..Default::default()
    };
    let fit = trans_lasso(&task, &cfg).unwrap();
    for h in &fit.halves {
        assert!(h.candidates.len() >= 6);
        let mut seen = h.candidates.sets.clone();
        seen.dedup();
        assert_eq!(seen.len(), h.candidates.len());
    }
    assert!(trans_lasso(&task, &TransLassoConfig { t_star_exponents: vec![1.0], ..Default::default() }).is_err());
}

#[test]
fn naive_without_auxiliaries_is_lasso() {
    let mut rng = rng_from_seed(5);
    let task = linear_task(&mut rng, &beta30(), 30, &[], 1.0);
    let cfg = OracleConfig::default();
    assert_eq!(naive_trans_lasso(&task, &cfg).unwrap().coef, plain_lasso(&task, &cfg).unwrap().coef);
}

#[test]
fn tiny_primary_is_rejected() {
    let mut rng = rng_from_seed(6);
    let task = linear_task(&mut rng, &beta30(), 3, &[], 1.0);
    assert!(trans_lasso(&task, &TransLassoConfig::default()).is_err());
}

#[test]
fn adaptive_close_to_oracle_in_config_ii() {
    let sc = SimScenario {
        h: 2,
        informative: 20,
        coef_config: CoefConfig::Ii,
        seed: 300,
        ..Default::default()
    };
    let table = run_replications(
        &sc,
        &[Method::Lasso, Method::Oracle, Method::TransLasso],
        50,
        &SimMethodsConfig::default(),
    )
    .unwrap();
    let (lasso, _) = table.mean_se(Method::Lasso).unwrap();
    let (oracle, _) = table.mean_se(Method::Oracle).unwrap();
    let (adaptive, _) = table.mean_se(Method::TransLasso).unwrap();
    assert!(adaptive <= 1.25 * oracle, "adaptive {adaptive} vs oracle {oracle}");
    assert!(adaptive < lasso);
}
