use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected} samples, got {actual}")]
    SampleCount { expected: usize, actual: usize },

    #[error("image dimensions {height}x{width} are below the {min}x{min} minimum")]
    TooSmall { height: usize, width: usize, min: usize },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("sample {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("{what} requires even dimensions, got {height}x{width}")]
    OddDimensions {
        what: &'static str,
        height: usize,
        width: usize,
    },

    #[error("dimensions {height}x{width} must be divisible by {factor}")]
    NotDivisible { height: usize, width: usize, factor: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("window {h}x{w} at ({top}, {left}) exceeds image bounds {height}x{width}")]
    OutOfBounds {
        top: usize,
        left: usize,
        h: usize,
        w: usize,
        height: usize,
        width: usize,
    },

    #[error("Bayer crop offset ({top}, {left}) must be even to preserve the pattern phase")]
    OddOffset { top: usize, left: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel of size {size} does not fit a {height}x{width} image")]
    KernelTooLarge { size: usize, height: usize, width: usize },

    #[error("source covariance is rank deficient (pivot {pivot:e})")]
    RankDeficient { pivot: f64 },

    #[error("pixel ({row}, {col}) is not covered by any patch")]
    UncoveredPixel { row: usize, col: usize },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("missing sidecar {0}")]
    MissingSidecar(PathBuf),

    #[error("checksum mismatch for {path}: manifest {expected}, file {actual}")]
    ChecksumMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error("jpeg encoding failed: {0}")]
    Jpeg(#[from] jpeg_encoder::EncodingError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
