use thiserror::Error;

/// Errors produced by the library and surfaced by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {evaluations} integrand evaluations (estimated error {estimated_error:e})")]
    NoConvergence {
        evaluations: usize,
        estimated_error: f64,
    },

    #[error("insufficient sample: need at least {needed}, got {given}")]
    InsufficientSample { needed: usize, given: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing year {0}")]
    MissingYear(i32),

    #[error("duplicate or out-of-order year {0}")]
    DuplicateYear(i32),

    #[error("non-positive consumption level {level} in year {year}")]
    NonPositiveLevel { year: i32, level: f64 },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("outside the validity domain of the expansion: {0}")]
    OutOfValidity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
