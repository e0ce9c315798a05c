use thiserror::Error;

/// Errors produced by construction, validation, and propagation.
#[derive(Debug, Error)]
pub enum Error {
    /// A spin sector, Fock space, or parameter set failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Two objects with incompatible Hilbert-space layouts were combined.
    #[error("layout mismatch: expected {expected}, found {found}")]
    LayoutMismatch { expected: String, found: String },

    /// A basis index fell outside its space.
    #[error("index out of range: {0}")]
    OutOfRange(String),

    /// The requested builder does not support this parameter regime.
    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),

    /// A function argument left the validated domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operator required to be Hermitian is not.
    #[error("operator not Hermitian: {0}")]
    NotHermitian(String),

    /// A state failed its norm/trace/positivity invariants.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A time grid was rejected before propagation started.
    #[error("time grid rejected: {0}")]
    Grid(String),

    /// A propagation diagnostic exceeded its tolerance.
    #[error("accuracy failure: {0}")]
    Accuracy(String),

    /// Population leaked into the guard levels of the Fock truncation.
    #[error("Fock truncation too small: {0}")]
    Truncation(String),
}

pub type Result<T> = core::result::Result<T, Error>;
