use std::path::{Path, PathBuf};

use piv_core::PivError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: PivError,
    },
    #[error(transparent)]
    Core(#[from] PivError),
}

impl CliError {
    /// 0 success, 1 usage, 2 I/O, 3 input or format, 4 estimation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::File { source, .. } | CliError::Core(source) => match source {
                PivError::Io(_) => 2,
                PivError::Input(_) | PivError::Format(_) => 3,
                PivError::Estimation(_) => 4,
            },
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn file(path: &Path, source: PivError) -> Self {
        CliError::File {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}
