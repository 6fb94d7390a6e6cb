use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Numeric(#[from] purify_core::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    /// Process exit status: 1 usage, 2 numerical or I/O failure, 3 failed check.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) | CliError::Io { .. } => 2,
            CliError::Check(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
