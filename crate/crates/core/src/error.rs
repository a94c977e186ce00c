use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian: max|A - A^dag| = {asymmetry:.3e}")]
    NotHermitian { asymmetry: f64 },

    #[error("operator is not unitary on the logical block: max|O^dag O - I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("logical dimension {0} is too small (need at least 2)")]
    LogicalDimTooSmall(usize),

    #[error("mutually unbiased basis is only available for logical dimension 4, got {0}")]
    UnsupportedMubDimension(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("integration failed in interval {interval}: {reason}")]
    IntegratorBreach { interval: usize, reason: String },

    #[error("update shape is zero at interval {interval} but the field deviates from the reference")]
    ZeroShapeWithDeviation { interval: usize },

    #[error("pulse update is not finite at interval {interval}")]
    NonFiniteUpdate { interval: usize },

    #[error("fidelity has imaginary part {imag:.3e}; map is not physical")]
    ComplexFidelity { imag: f64 },

    #[error("not a projector: {0}")]
    NotProjector(String),

    #[error("channel is not CPTP: {0}")]
    NotCptp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
