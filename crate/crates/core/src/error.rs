use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric error in {context}: {detail}")]
    Numeric { context: String, detail: String },

    #[error("state error: {0}")]
    State(String),

    #[error("format error: {0}")]
    Format(#[from] FormatError),

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numeric {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Failures while decoding the binary dataset and checkpoint containers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
}
