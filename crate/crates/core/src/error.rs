use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch { expected: Vec<usize>, got: Vec<usize> },

    #[error("laplace_isotropic requires an identity spectrum")]
    LaplaceNeedsIdentity,

    #[error("family `{0}` has no finite psi_2 norm")]
    UnsupportedFamily(&'static str),

    #[error("tensor order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("population tensor not available: {0}")]
    UnsupportedPopulation(String),

    #[error("net oracle budget exceeded: {points} net points (limit {limit})")]
    BudgetExceeded { points: u64, limit: u64 },

    #[error("dense tensor with {entries} entries exceeds the limit {limit}")]
    TooLarge { entries: usize, limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument { name, reason: reason.into() }
}
