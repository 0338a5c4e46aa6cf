use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("matrix is not antisymmetric (max |E + E^T| = {deviation:e})")]
    NotAntisymmetric { deviation: f64 },

    #[error("matrix is not orthogonal (max |Q Q^T - I| = {deviation:e})")]
    NotOrthogonal { deviation: f64 },

    #[error("matrix is numerically singular (condition estimate {condition:e})")]
    SingularInput { condition: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("entry below numerical floor in {context}: {value:e}")]
    FloorViolation { context: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("column {column} of the dictionary has degenerate sum {sum:e}")]
    DegenerateColumn { column: usize, sum: f64 },

    #[error("search direction is not a descent direction (slope {slope:e})")]
    NotADescentDirection { slope: f64 },

    #[error("full Hessian oracle refused for M = {dim} (limit {limit})")]
    SizeGuard { dim: usize, limit: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt or truncated WAV data: {0}")]
    CorruptHeader(String),

    #[error("signal of {len} samples is shorter than one frame of {frame} samples")]
    SignalTooShort { len: usize, frame: usize },

    #[error("invalid atom count {count} for a transform of dimension {dim}")]
    InvalidCount { count: usize, dim: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn shape_mismatch(
    context: &'static str,
    expected: (usize, usize),
    actual: (usize, usize),
) -> Error {
    Error::DimensionMismatch {
        context,
        expected: format!("{}x{}", expected.0, expected.1),
        actual: format!("{}x{}", actual.0, actual.1),
    }
}
