use thiserror::Error;

pub type Result<T, E = ClamError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ClamError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid label: {0}")]
    Label(String),

    #[error("degenerate bag: {0}")]
    DegenerateBag(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("cannot split: {0}")]
    Split(String),

    #[error("sampler: {0}")]
    Sampler(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ClamError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        ClamError::Dimension(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        ClamError::Config(msg.into())
    }

    pub(crate) fn format(offset: u64, msg: impl Into<String>) -> Self {
        ClamError::Format {
            offset,
            message: msg.into(),
        }
    }
}
