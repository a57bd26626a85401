use std::path::PathBuf;

use clam::ClamError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] ClamError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 usage or configuration, 2 data or format, 3 numeric or training.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(ClamError::Config(_)) => 1,
            CliError::Core(ClamError::Numeric(_) | ClamError::Training { .. }) => 3,
            CliError::Core(_) | CliError::Io { .. } => 2,
        }
    }
}
