use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("kernel {kh}x{kw} does not fit image {h}x{w}")]
    KernelTooLarge { kh: usize, kw: usize, h: usize, w: usize },

    #[error("unknown corruption mode `{0}`")]
    UnknownMode(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported PNG {path:?}: {reason}")]
    UnsupportedPng { path: Option<PathBuf>, reason: String },

    #[error("PNG decode error: {0}")]
    PngDecode(#[from] png::DecodingError),

    #[error("PNG encode error: {0}")]
    PngEncode(#[from] png::EncodingError),

    #[error("JPEG codec error: {0}")]
    Jpeg(String),

    #[error("malformed record: {0}")]
    Malformed(String),

    #[error("missing input: {0}")]
    Missing(String),

    #[error("assumption not satisfied: {0}")]
    Assumption(String),

    #[error("I/O error on {path:?}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures of the filesystem or of reading an input file, as
    /// opposed to invalid arguments or data.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::PngDecode(_) | Error::PngEncode(_) | Error::Missing(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
