use std::path::PathBuf;

use thiserror::Error;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    PropertyFailure = 1,
    Usage = 2,
    Internal = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// The worse of two outcomes.
    pub fn and(self, other: ExitStatus) -> ExitStatus {
        if other.code() > self.code() {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] heckesign::Error),
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        use heckesign::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config { .. } => ExitStatus::Usage,
            CliError::Core(E::InvalidArgument(_)) => ExitStatus::Usage,
            CliError::Core(E::DeligneViolation { .. } | E::NonPositiveWeight { .. }) => {
                ExitStatus::PropertyFailure
            }
            _ => ExitStatus::Internal,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
