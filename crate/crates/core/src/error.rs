use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed column label `{0}`, expected GENE@TIME")]
    BadLabel(String),

    #[error("duplicate column label `{0}`")]
    DuplicateLabel(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-numeric cell `{value}` at row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("missing value at row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },

    #[error("column `{0}` is constant and cannot be standardized")]
    ConstantColumn(String),

    #[error("at least {needed} replicates are required, got {got}")]
    TooFewReplicates { needed: usize, got: usize },

    #[error("lag cap {lag_cap} out of range for {times} time points")]
    LagCap { lag_cap: usize, times: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance is singular; a positive lambda1 is required")]
    SingularCovariance,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("solver did not converge in {iterations} iterations")]
    NotConverged {
        iterations: usize,
        estimate: Box<crate::solver::PrecisionEstimate>,
    },

    #[error("time index {k} out of range for {times} time points")]
    TimeIndex { k: usize, times: usize },

    #[error("edge is outside the comparison universe")]
    OutsideUniverse,

    #[error("malformed artifact: {0}")]
    Malformed(String),

    #[error("simulation: {0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
