use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum PivError {
    /// Caller supplied arguments that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    Input(String),
    /// A byte stream does not follow the expected file layout.
    #[error("malformed data: {0}")]
    Format(String),
    /// An estimator could not produce a result (e.g. featureless images).
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PivError>;

pub(crate) fn input_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(PivError::Input(msg.into()))
}
