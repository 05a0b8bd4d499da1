use thiserror::Error;

/// Errors produced by the estimation pipeline and its kernels.
#[derive(Error, Debug)]
pub enum Error {
    #[error("index out of range: {what} = {got}, valid range is 0..{bound}")]
    IndexOutOfRange {
        what: &'static str,
        got: usize,
        bound: usize,
    },

    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix not positive definite: nonpositive pivot at index {index} (value {pivot:.3e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("design matrix is rank deficient: X'V^-1X could not be inverted")]
    RankDeficientDesign,

    #[error("information matrix is singular or indefinite; eigenvalues: {eigenvalues:?}")]
    SingularInformation { eigenvalues: Vec<f64> },

    #[error("likelihood not finite at requested point{}", .context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    NonFiniteLikelihood { context: Option<String> },

    #[error("dataset contains missing responses; this method requires complete data")]
    MissingDataPresent,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
