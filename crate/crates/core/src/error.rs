use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed NIfTI header: {0}")]
    MalformedHeader(String),

    #[error("unsupported NIfTI datatype code {0}")]
    UnsupportedDatatype(i16),

    #[error("unsupported dimensionality: {0}")]
    UnsupportedDimensions(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("value {value} at voxel {index} is not representable as {dtype}")]
    Unrepresentable {
        value: f64,
        index: usize,
        dtype: &'static str,
    },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty foreground: no voxels above zero")]
    EmptyForeground,

    #[error("foreground has zero variance")]
    ZeroVariance,

    #[error("result would be empty: {0}")]
    EmptyResult(String),

    #[error("empty rater stack")]
    EmptyStack,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("could only place {achieved} of {requested} lesions without overlap")]
    LesionPlacement { achieved: usize, requested: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
