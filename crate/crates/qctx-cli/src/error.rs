use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Library(#[from] qctx::Error),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

impl CliError {
    pub fn io(path: impl Into<String>, e: impl ToString) -> Self {
        CliError::Io { path: path.into(), msg: e.to_string() }
    }

    /// 2 for configuration problems, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Library(qctx::Error::Numerical { .. }) => 3,
            CliError::Library(qctx::Error::Io(_)) | CliError::Io { .. } => 1,
            CliError::Library(_) => 2,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io { path: "csv".into(), msg: e.to_string() }
    }
}
