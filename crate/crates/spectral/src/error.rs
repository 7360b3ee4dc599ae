use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("{axis} has {n} points; need a power of two >= 16")]
    BadResolution { axis: char, n: usize },
    #[error("domain length {axis} must be positive and finite")]
    BadLength { axis: char },
    #[error("carrier k = {k} gives index {m} = k*lx/(2 pi), not a positive integer")]
    NonAdmissibleCarrier { k: f64, m: f64 },
    #[error("carrier index {m} must be below nx/2 = {half}")]
    GridTooSmall { m: i64, half: usize },
    #[error("grid mismatch")]
    GridMismatch,
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}
