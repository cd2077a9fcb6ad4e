use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: String, actual: String },

    #[error("parse error at byte {offset}{}: {message}", pixel.map(|p| format!(" (pixel {p})")).unwrap_or_default())]
    Parse {
        offset: usize,
        pixel: Option<usize>,
        message: String,
    },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("length mismatch: expected a multiple of {expected} bytes, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(offset: usize, pixel: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            pixel,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
