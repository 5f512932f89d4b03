use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Semantic {
        context: String,
        #[source]
        source: nilkl::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 0 success, 1 semantic failure, 2 parse failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Semantic { .. } => 1,
            CliError::Parse { .. } | CliError::Io { .. } | CliError::Usage(_) => 2,
        }
    }

    pub(crate) fn semantic(context: impl Into<String>, source: nilkl::Error) -> Self {
        CliError::Semantic {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
