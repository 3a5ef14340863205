//! Ranking auxiliary studies by how sparse their contrast appears.
//!
//! For each auxiliary study the difference of empirical cross-moments with
//! the primary sample is screened down to its `t_*` largest entries; the
//! squared norm of what survives is the study's sparsity index. Lower means
//! more informative. Candidate sets are the `l` lowest-index studies for
//! `l = 0..=K`.

use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Study;
use crate::error::{Error, Result};

/// Marginal statistics, screened sets and indices for every auxiliary study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparsityReport {
    #[serde(skip)]
    pub delta_hat: Vec<Array1<f64>>,
    pub screened: Vec<Vec<usize>>,
    pub index: Vec<f64>,
    pub t_star: usize,
    pub alpha: f64,
}

/// Nested candidate informative sets, `sets[l]` having `l` members when built
/// from a single index vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CandidateSets {
    pub sets: Vec<Vec<usize>>,
}

impl CandidateSets {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Appends the non-empty sets of `other` not already present.
    pub fn merge(&mut self, other: &CandidateSets) {
        for s in &other.sets {
            if !self.sets.contains(s) {
                self.sets.push(s.clone());
            }
        }
    }
}

/// `X_kᵀy_k / n_k − X_Iᵀy_I / |I|`.
pub fn marginal_stats(primary_half: &Study, aux: &Study) -> Result<Array1<f64>> {
    if primary_half.p() != aux.p() {
        return Err(Error::DimensionMismatch(format!(
            "study `{}` has {} covariates, primary has {}",
            aux.id,
            aux.p(),
            primary_half.p()
        )));
    }
    Ok(&aux.cross_moment() - &primary_half.cross_moment())
}

/// Positions of the `t_star` largest `|Δ_j|`, ties to the lower index,
/// returned in ascending order.
pub fn sure_screen(delta_hat: ArrayView1<f64>, t_star: usize) -> Vec<usize> {
    let p = delta_hat.len();
    if t_star >= p {
        return (0..p).collect();
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        delta_hat[b]
            .abs()
            .total_cmp(&delta_hat[a].abs())
            .then(a.cmp(&b))
    });
    let mut kept = order[..t_star].to_vec();
    kept.sort_unstable();
    kept
}

/// Sum of squared entries of `delta_hat` over `screened`.
pub fn sparsity_index(delta_hat: ArrayView1<f64>, screened: &[usize]) -> f64 {
    screened.iter().map(|&j| delta_hat[j] * delta_hat[j]).sum()
}

/// `Ĝ_0 = ∅` followed by the `l` smallest-index studies for `l = 1..=K`,
/// ties to the lower auxiliary position.
pub fn build_candidate_sets(index: &[f64]) -> CandidateSets {
    let mut order: Vec<usize> = (0..index.len()).collect();
    order.sort_by(|&a, &b| index[a].total_cmp(&index[b]).then(a.cmp(&b)));
    let mut sets = Vec::with_capacity(index.len() + 1);
    for l in 0..=index.len() {
        let mut s = order[..l].to_vec();
        s.sort_unstable();
        sets.push(s);
    }
    CandidateSets { sets }
}

/// `floor(n^alpha)`, at least 1.
pub fn t_star_for(n: usize, alpha: f64) -> usize {
    ((n as f64).powf(alpha).floor() as usize).max(1)
}

/// Computes the full report for a primary half against every auxiliary.
pub fn sparsity_report(primary_half: &Study, auxiliaries: &[Study], t_star: usize, alpha: f64) -> Result<SparsityReport> {
    if t_star == 0 {
        return Err(Error::InvalidArgument("t_star must be at least 1".into()));
    }
    let delta_hat: Vec<Array1<f64>> = auxiliaries
        .par_iter()
        .map(|aux| marginal_stats(primary_half, aux))
        .collect::<Result<_>>()?;
    let screened: Vec<Vec<usize>> = delta_hat.iter().map(|d| sure_screen(d.view(), t_star)).collect();
    let index = delta_hat
        .iter()
        .zip(&screened)
        .map(|(d, s)| sparsity_index(d.view(), s))
        .collect();
    Ok(SparsityReport {
        delta_hat,
        screened,
        index,
        t_star,
        alpha,
    })
}

/// Whether every study in `informative` ranks among the `|informative|`
/// smallest indices (ties broken as in [`build_candidate_sets`]).
pub fn ranks_informative_first(index: &[f64], informative: &[usize]) -> bool {
    let mut want = informative.to_vec();
    want.sort_unstable();
    want.dedup();
    build_candidate_sets(index).sets[want.len()] == want
}
