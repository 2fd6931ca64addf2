use std::path::PathBuf;

use thiserror::Error;

/// Process exit status for configuration errors.
pub const EXIT_CONFIG: i32 = 1;
/// Process exit status for I/O failures.
pub const EXIT_IO: i32 = 2;
/// Process exit status when a validation run fails.
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<genai_abm::Error> for CliError {
    fn from(e: genai_abm::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
