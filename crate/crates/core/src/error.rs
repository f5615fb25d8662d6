use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the correction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown water type `{0}` (expected one of I, IA, IB, II, III, 1C, 3C, 5C, 7C, 9C)")]
    UnknownWaterType(String),

    #[error("malformed table {path}: {message}")]
    MalformedTable { path: String, message: String },

    #[error("spectral curve covers {have_lo}-{have_hi} nm but {need_lo}-{need_hi} nm is required")]
    InsufficientCoverage {
        have_lo: f64,
        have_hi: f64,
        need_lo: f64,
        need_hi: f64,
    },

    #[error("wavelength {0} nm lies outside the curve support")]
    OutOfSupport(f64),

    #[error("invalid spectral curve: {0}")]
    InvalidCurve(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("chart patch `{0}` not found")]
    MissingPatch(String),

    #[error("region `{0}` is empty")]
    EmptyRegion(String),

    #[error("degenerate observation in channel {channel}: {reason}")]
    DegenerateObservation { channel: usize, reason: String },

    #[error("channel {0} has zero mean")]
    ZeroChannelMean(usize),

    #[error("color has zero norm")]
    ZeroNorm,

    #[error("series has {0} samples, at least 2 are required")]
    SeriesTooShort(usize),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::DegenerateObservation { .. } | Error::ZeroNorm
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
