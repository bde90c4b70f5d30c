//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid array shape: {0}")]
    InvalidShape(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("reflection coefficient {index} has modulus {modulus}, expected 1")]
    InvalidReflection { index: usize, modulus: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("no signal present in the observation")]
    NoSignal,
    #[error("search grid is empty")]
    EmptyGrid,
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),
    #[error("channel is identically zero")]
    ZeroChannel,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
