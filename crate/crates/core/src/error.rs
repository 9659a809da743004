use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors shared by every module of the crate.
///
/// `InvalidInput` and `Adapter` are kept apart on purpose: long-running
/// callers skip-and-count adapter failures but abort on bad input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("adapter `{slot}` failed: {message}")]
    Adapter { slot: &'static str, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("generation failed: {0}")]
    GenerationFailed(String),

    #[error("training backend failed: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn adapter(slot: &'static str, msg: impl Into<String>) -> Self {
        Error::Adapter {
            slot,
            message: msg.into(),
        }
    }

    pub fn is_adapter(&self) -> bool {
        matches!(self, Error::Adapter { .. })
    }
}
