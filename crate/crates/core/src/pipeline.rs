//! Adaptive transfer Lasso: split the primary sample, rank auxiliaries on one
//! half, fit one candidate per nested informative set, aggregate the
//! candidates on the other half, then swap halves and average.

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{estimate_noise_variance, q_aggregate, AggregationResult};
use crate::data::TaskData;
use crate::detect::{build_candidate_sets, sparsity_report, t_star_for, CandidateSets, SparsityReport};
use crate::error::{Error, Result};
use crate::lasso::FitResult;
use crate::oracle::{oracle_trans_lasso, OracleConfig, OracleFit};
use crate::util::seeded_permutation;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaPenalty {
    /// Four times the estimated noise variance of the dictionary half.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransLassoConfig {
    pub seed: u64,
    /// One set of candidates is built per exponent; duplicates are dropped.
    pub t_star_exponents: Vec<f64>,
    pub oracle: OracleConfig,
    pub lambda_theta: ThetaPenalty,
    pub cross_fit: bool,
}

impl Default for TransLassoConfig {
    fn default() -> Self {
        TransLassoConfig {
            seed: 0,
            t_star_exponents: vec![0.75],
            oracle: OracleConfig::default(),
            lambda_theta: ThetaPenalty::Auto,
            cross_fit: true,
        }
    }
}

/// Everything computed for one assignment of the two primary halves.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfDiagnostics {
    /// Primary rows used for ranking and candidate fits.
    pub dictionary_rows: Vec<usize>,
    /// Primary rows used for aggregation.
    pub holdout_rows: Vec<usize>,
    pub report: SparsityReport,
    pub candidates: CandidateSets,
    #[serde(skip)]
    pub candidate_coefs: Vec<Array1<f64>>,
    pub aggregation: AggregationResult,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransLassoFit {
    pub beta: FitResult,
    pub halves: Vec<HalfDiagnostics>,
}

/// Seeded split of `0..n` into a first part of size `ceil(n/2)` and the rest,
/// each returned in ascending order.
pub fn split_primary(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let perm = seeded_permutation(n, seed);
    let cut = n.div_ceil(2);
    let mut first = perm[..cut].to_vec();
    let mut second = perm[cut..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    (first, second)
}

fn run_half(
    task: &TaskData,
    dictionary_rows: &[usize],
    holdout_rows: &[usize],
    cfg: &TransLassoConfig,
) -> Result<HalfDiagnostics> {
    let n0 = task.primary.n();
    let half = task.primary.select_rows(dictionary_rows);
    let holdout = task.primary.select_rows(holdout_rows);

    let mut report = None;
    let mut candidates = CandidateSets { sets: Vec::new() };
    for &alpha in &cfg.t_star_exponents {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "t_star exponent must lie in [0, 1), got {alpha}"
            )));
        }
        let r = sparsity_report(&half, &task.auxiliaries, t_star_for(n0, alpha), alpha)?;
        candidates.merge(&build_candidate_sets(&r.index));
        report.get_or_insert(r);
    }
    let report = report.ok_or_else(|| Error::InvalidArgument("no t_star exponent given".into()))?;

    let sub_task = task.with_primary(half);
    let fits: Vec<OracleFit> = candidates
        .sets
        .par_iter()
        .map(|set| oracle_trans_lasso(&sub_task, set, &cfg.oracle))
        .collect::<Result<_>>()?;
    let candidate_coefs: Vec<Array1<f64>> = fits.into_iter().map(|f| f.beta.coef).collect();

    let lambda_theta = match cfg.lambda_theta {
        ThetaPenalty::Fixed(v) => v,
        ThetaPenalty::Auto => 4.0 * estimate_noise_variance(sub_task.primary.x.view(), sub_task.primary.y.view())?,
    };
    let aggregation = q_aggregate(&candidate_coefs, holdout.x.view(), holdout.y.view(), lambda_theta, n0)?;
    Ok(HalfDiagnostics {
        dictionary_rows: dictionary_rows.to_vec(),
        holdout_rows: holdout_rows.to_vec(),
        report,
        candidates,
        candidate_coefs,
        aggregation,
    })
}

/// Adaptive transfer Lasso over all auxiliaries.
pub fn trans_lasso(task: &TaskData, cfg: &TransLassoConfig) -> Result<TransLassoFit> {
    let n0 = task.primary.n();
    if n0 < 4 {
        return Err(Error::InvalidArgument(format!(
            "primary sample needs at least 4 rows, has {n0}"
        )));
    }
    let (first, second) = split_primary(n0, cfg.seed);
    let halves = if cfg.cross_fit {
        let (a, b) = rayon::join(
            || run_half(task, &first, &second, cfg),
            || run_half(task, &second, &first, cfg),
        );
        vec![a?, b?]
    } else {
        vec![run_half(task, &first, &second, cfg)?]
    };
    let mut coef = Array1::<f64>::zeros(task.p());
    for h in &halves {
        coef += &h.aggregation.beta;
    }
    coef /= halves.len() as f64;
    let objective = halves.iter().map(|h| h.aggregation.objective).sum::<f64>() / halves.len() as f64;
    Ok(TransLassoFit {
        beta: FitResult::from_coef(coef, objective, 0.0),
        halves,
    })
}

/// The two-step estimator treating every auxiliary study as informative.
pub fn naive_trans_lasso(task: &TaskData, cfg: &OracleConfig) -> Result<FitResult> {
    let all: Vec<usize> = (0..task.k()).collect();
    Ok(oracle_trans_lasso(task, &all, cfg)?.beta)
}

/// Primary-only Lasso at the pooled-step penalty rule with no auxiliaries.
pub fn plain_lasso(task: &TaskData, cfg: &OracleConfig) -> Result<FitResult> {
    Ok(oracle_trans_lasso(task, &[], cfg)?.beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes() {
        let (a, b) = split_primary(7, 3);
        assert_eq!(a.len(), 4);
        assert_eq!(b.len(), 3);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..7).collect::<Vec<_>>());
        assert_eq!(split_primary(7, 3), (a, b));
    }
}
