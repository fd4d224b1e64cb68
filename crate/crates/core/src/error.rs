use std::io;

use thiserror::Error;

/// Errors raised anywhere in the learner, simulator or harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid architecture, track, or configuration value.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called in a state where it cannot run
    /// (empty batch, stale forward cache, buffer still warming up).
    #[error("usage error: {0}")]
    Usage(String),

    /// A non-finite value appeared during optimization.
    #[error("training error in layer {layer}: {message}")]
    Training { layer: usize, message: String },

    /// A checkpoint or data file could not be decoded.
    #[error("format error in field `{field}`: {message}")]
    Format { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn format(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            message: msg.into(),
        }
    }

    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Config(_) => 2,
            Error::Training { .. } | Error::Format { .. } | Error::Io(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
