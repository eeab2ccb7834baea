//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition (length mismatch,
    /// malformed information set, bad rate, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A configured size limit was exceeded or a setting is unusable
    /// (enumeration limits, blocklength caps, missing checkpoint, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A checkpoint file could not be loaded (bad version, corrupt data).
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
