use thiserror::Error;

/// Errors produced by the forecasting engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("design matrix is numerically singular (rank-deficient column {column})")]
    SingularDesign { column: usize },

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("parse error at line {line}, column `{column}`: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },

    #[error("gap in hourly series at {at}: {message}")]
    Gap { at: String, message: String },

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("degenerate column {column}: zero standard deviation")]
    DegenerateColumn { column: usize },

    #[error("invalid range: {0}")]
    Range(String),

    #[error("architecture {arch} requires the {block} input block")]
    MissingInput {
        arch: &'static str,
        block: &'static str,
    },

    #[error("non-finite gradient for parameter {0}")]
    NonFiniteGradient(String),

    #[error("trial {id} failed: {reason}")]
    TrialFailed { id: usize, reason: String },

    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),

    #[error("naive baseline MAE is zero")]
    DegenerateBaseline,

    #[error("loss differential has zero variance")]
    DegenerateDifferential,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(
    context: &'static str,
    expected: impl ToString,
    actual: impl ToString,
) -> Error {
    Error::ShapeMismatch {
        context,
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
