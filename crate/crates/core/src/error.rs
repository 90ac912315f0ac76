use std::collections::BTreeMap;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The bounds require every node to have the same neighbour count.
    #[error("graph is not degree-homogeneous: min degree {min}, max degree {max}")]
    NonHomogeneous {
        min: usize,
        max: usize,
        /// degree -> number of nodes with that degree
        histogram: BTreeMap<usize, usize>,
    },

    #[error("filter entry ({row}, {col}) is nonzero but {{{row}, {col}}} is not an edge")]
    NotGraphShift { row: usize, col: usize },

    #[error("spectral radius did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("non-finite value at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
