//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An operation precondition was violated (bad dimension, empty list, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Batch training could not be carried out (e.g. fewer samples than
    /// hidden nodes).
    #[error("training error: {0}")]
    Training(String),

    /// A linear-algebra step failed, typically a singular system.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A stream record was rejected (non-finite values, zero target).
    #[error("data error: {0}")]
    Data(String),

    /// Configuration rejected before any work was done.
    #[error("configuration error: {0}")]
    Config(String),

    /// I/O failure with file context.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Parse failure with file and line context.
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
