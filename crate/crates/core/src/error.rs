use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by estimation, simulation and ingestion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular matrix: pivot {pivot:.3e} in column {column} is below {tolerance:e}")]
    SingularMatrix {
        column: usize,
        pivot: f64,
        tolerance: f64,
    },

    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    #[error("{path}: row {row}, column `{column}`: {reason}")]
    Ingestion {
        path: PathBuf,
        row: usize,
        column: String,
        reason: String,
    },

    #[error("{path}: {reason}")]
    Input { path: PathBuf, reason: String },

    #[error("scenario failed: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
