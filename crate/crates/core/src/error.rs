use thiserror::Error;

pub type Result<T> = std::result::Result<T, BfdError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BfdError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: operator has {expected} unknowns, vector has {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("unsupported finite difference order {0} (expected 2, 4 or 6)")]
    UnsupportedOrder(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("degenerate mode at omega = {omega}: {reason}")]
    DegenerateMode { omega: i64, reason: String },

    #[error("eigen-residual {residual:e} exceeds tolerance {tolerance:e} at omega = {omega}")]
    EigenResidual { omega: i64, residual: f64, tolerance: f64 },

    #[error("non-finite state after step {step} (t = {time}): scheme unstable or time step too large")]
    NonFinite { step: usize, time: f64 },

    #[error("near-singular modal system at omega = {omega} (|det| = {det:e})")]
    SingularModal { omega: i64, det: f64 },

    #[error("problem too large: {n} blocks exceeds limit {max}")]
    TooLarge { n: usize, max: usize },

    #[error("singular linear system: {0}")]
    Singular(String),
}
