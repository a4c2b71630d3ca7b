use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] netcoord::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("invalid experiment: {0}")]
    Config(String),

    #[error("{} check(s) failed: {}", .0.len(), .0.join("; "))]
    Assertion(Vec<String>),

    #[error("solver did not converge: {}", .0.join("; "))]
    NonConvergence(Vec<String>),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 failed assertion, 3 non-convergence, 4 I/O, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Assertion(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io { .. } | CliError::Core(netcoord::Error::Csv(_)) => 4,
            CliError::Core(_) | CliError::Config(_) => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
