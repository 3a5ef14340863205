use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("study `{study}`: column {column} has zero variance and cannot be scaled")]
    ConstantColumn { study: String, column: usize },

    #[error("study `{study}` contains a non-finite value at row {row}, column {column}")]
    NonFinite {
        study: String,
        row: usize,
        column: usize,
    },

    #[error("auxiliary index {index} out of range (K = {count})")]
    UnknownAuxiliary { index: usize, count: usize },

    #[error("zero diagonal entry at coordinate {0} of the quadratic form")]
    ZeroDiagonal(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("covariance for regime {regime}, study {study}, p = {p} is not positive definite")]
    NotPositiveDefinite {
        regime: String,
        study: usize,
        p: usize,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("replication with seed {seed} failed: {source}")]
    Replication {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl Error {
    /// Whether the error stems from bad user input rather than an internal fault.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::DimensionMismatch(_)
            | Error::ConstantColumn { .. }
            | Error::NonFinite { .. }
            | Error::UnknownAuxiliary { .. }
            | Error::InvalidArgument(_)
            | Error::NotPositiveDefinite { .. }
            | Error::Parse { .. } => true,
            Error::Replication { source, .. } => source.is_validation(),
            Error::ZeroDiagonal(_) | Error::Io { .. } | Error::Serialize(_) => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
