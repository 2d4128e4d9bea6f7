use thiserror::Error;

/// Errors raised by the laboratory's operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 4")]
    GridSize(usize),
    #[error("dimension {0} not supported (1 or 2)")]
    Dimension(usize),
    #[error("sample count mismatch: expected {expected}, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid exponent: {0}")]
    Exponent(String),
    #[error("band index {band} out of range [0, {max}]")]
    Band { band: usize, max: usize },
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("resolution guard: {0}")]
    Resolution(String),
    #[error("size guard: {0}")]
    SizeGuard(String),
    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NotConverged { iterations: usize, estimate: f64 },
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
