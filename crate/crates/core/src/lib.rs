//! Transfer learning for high-dimensional sparse linear regression.
//!
//! A primary study is fitted with help from auxiliary studies whose
//! coefficient vectors differ from the primary one by a sparse contrast.
//! The crate provides the Lasso solvers, the two-step estimators for a known
//! informative set, the data-driven ranking and aggregation procedure for an
//! unknown set, and a simulation harness.

pub mod aggregate;
pub mod cli;
pub mod data;
pub mod detect;
pub mod error;
pub mod lasso;
pub mod oracle;
pub mod pipeline;
pub mod sim;
pub mod util;

pub use aggregate::{q_aggregate, AggregationResult};
pub use data::{standardize, stacked_gram, StandardizationRecord, Study, StudyKind, TaskData};
pub use detect::{build_candidate_sets, sparsity_index, sure_screen, CandidateSets, SparsityReport};
pub use error::{Error, Result};
pub use lasso::{fit_lasso, fit_lasso_quadratic, FitResult, LassoConfig};
pub use oracle::{oracle_trans_lasso, oracle_trans_lasso_l0, OracleConfig};
pub use pipeline::{trans_lasso, TransLassoConfig, TransLassoFit};
