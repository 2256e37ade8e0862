use thiserror::Error;

/// Errors raised by the library. Solver outcomes (infeasible, rank > 1, ...)
/// are reported through status fields, not through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("condition check failed: {0}")]
    ConditionFailed(String),
    #[error("parse error at {pointer}: {message}")]
    Parse { pointer: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable stage tag, used by the CLI error document.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::Validation(_) | Error::Dimension { .. } => "validation",
            Error::Contract(_) => "contract",
            Error::ConditionFailed(_) => "condition",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
