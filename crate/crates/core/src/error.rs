use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApncError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {usable} usable point(s), at least {required} required")]
    InsufficientData { usable: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, ApncError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ApncError::InvalidArgument(msg.into()))
}
