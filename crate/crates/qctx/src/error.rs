use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Unsupported or out-of-range configuration value.
    #[error("configuration error: {0}")]
    Config(String),
    /// An input failed a structural precondition (unitarity, trace preservation, ...).
    #[error("validation error: {0}")]
    Validation(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    /// Singular or ill-conditioned matrix, non-convergence, non-finite values.
    #[error("numerical error: {msg}{}", context.as_ref().map(|c| format!(" [{c}]")).unwrap_or_default())]
    Numerical { msg: String, context: Option<String> },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical { msg: msg.into(), context: None }
    }

    pub fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::Numerical { msg, .. } => Error::Numerical { msg, context: Some(ctx.into()) },
            other => other,
        }
    }

    pub fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch { expected: expected.to_string(), found: found.to_string() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
