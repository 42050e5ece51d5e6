use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimensions must be positive, got {height}x{width}")]
    ZeroDimension { height: usize, width: usize },

    #[error("data length {got} does not match {height}x{width}")]
    LengthMismatch {
        height: usize,
        width: usize,
        got: usize,
    },

    #[error("value {value} at index {index} is not a finite number in [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("value {value} at index {index} is not a binary 0/1 value")]
    NotBinary { index: usize, value: u8 },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),

    #[error("truncated PGM payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("PGM maxval {found} does not match requested kind {kind} (needs {expected})")]
    MaxvalMismatch {
        kind: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown component id {id} (map has {count} components)")]
    UnknownComponent { id: u32, count: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("predictor failed at scale {scale}: {reason}")]
    Predictor { scale: usize, reason: String },

    #[error("dataset has no ground-truth targets; detection rate is undefined")]
    NoTargets,

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("invalid threshold list: {0}")]
    InvalidThresholds(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ZeroDimension { .. } => "zero-dimension",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::OutOfRange { .. } => "out-of-range",
            Error::NotBinary { .. } => "not-binary",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::MalformedHeader(_) => "malformed-header",
            Error::Truncated { .. } => "truncated",
            Error::MaxvalMismatch { .. } => "maxval-mismatch",
            Error::Io { .. } => "io",
            Error::InvalidConfig(_) => "invalid-config",
            Error::UnknownComponent { .. } => "unknown-component",
            Error::Empty(_) => "empty",
            Error::Predictor { .. } => "predictor",
            Error::NoTargets => "no-targets",
            Error::Diverged { .. } => "diverged",
            Error::InvalidThresholds(_) => "invalid-thresholds",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
