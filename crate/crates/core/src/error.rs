use thiserror::Error;

#[derive(Debug, Error)]
pub enum BprError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range (frame count {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = BprError> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> BprError {
    BprError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn shape(msg: impl Into<String>) -> BprError {
    BprError::Shape(msg.into())
}
