//! Command implementations behind the `covadj` binary.

pub mod args;
pub mod commands;
pub mod covspec;
pub mod format;
pub mod manifest;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] covadj_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("routes disagree by {0:e}, above the 1e-8 limit")]
    Discrepancy(f64),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(covadj_core::Error::TooManyRedraws { .. }) => 3,
            CliError::Discrepancy(_) => 4,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
