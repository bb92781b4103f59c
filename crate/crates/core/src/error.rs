use thiserror::Error;

/// Errors raised by validation and by operations with dimensional contracts.
///
/// Numeric payloads are reported as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max asymmetry {max_asymmetry:e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("density matrix trace {trace} is not 1")]
    NotNormalized { trace: f64 },

    #[error("diagonal entry {index} is {value}, expected 1")]
    DiagonalNotUnit { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} unsupported: {reason}")]
    UnsupportedDimension { dim: usize, reason: &'static str },

    #[error("operator {index} is not an orthogonal projector")]
    NotProjector { index: usize },

    #[error("projectors {first} and {second} are not mutually orthogonal")]
    ProjectorsNotOrthogonal { first: usize, second: usize },

    #[error("projectors do not sum to the identity (defect {defect:e})")]
    ProjectorsIncomplete { defect: f64 },

    #[error("decomposition does not reproduce the channel (residual {residual:e})")]
    DecompositionMismatch { residual: f64 },

    #[error("invalid probability vector: {reason}")]
    InvalidProbabilityVector { reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
