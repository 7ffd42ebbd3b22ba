use std::fmt;

use thiserror::Error;

/// Why a PLY byte stream was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// The header is malformed or lacks a required vertex property.
    Header(String),
    /// The payload is shorter than the header's element counts require.
    Truncated { expected: usize, actual: usize },
    /// ASCII or big-endian PLY.
    UnsupportedEncoding(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Header(msg) => write!(f, "header: {msg}"),
            ParseErrorKind::Truncated { expected, actual } => {
                write!(
                    f,
                    "truncated: expected {expected} payload bytes, found {actual}"
                )
            }
            ParseErrorKind::UnsupportedEncoding(enc) => write!(f, "unsupported encoding `{enc}`"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("PLY parse error: {0}")]
    Parse(ParseErrorKind),
    #[error("cannot write an empty splat scene")]
    EmptyScene,
    #[error("insufficient points: need more than {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("weight error: {0}")]
    Weight(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn header(msg: impl Into<String>) -> Self {
        Error::Parse(ParseErrorKind::Header(msg.into()))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
