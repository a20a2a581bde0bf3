use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("measure space must contain at least one point")]
    EmptySpace,

    #[error("weight at point {index} is {value}; weights must be finite and strictly positive")]
    InvalidWeight { index: usize, value: f64 },

    #[error("value at point {index} is not finite")]
    NonFinite { index: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("operator is not positive semidefinite: minimum eigenvalue {min_eigenvalue:e} below tolerance {tolerance:e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64, tolerance: f64 },

    #[error(
        "operator is not self-adjoint: asymmetry {asymmetry:e} exceeds tolerance {tolerance:e}"
    )]
    NotSelfAdjoint { asymmetry: f64, tolerance: f64 },

    #[error("{routine} did not converge within {iterations} iterations")]
    NonConvergence {
        routine: &'static str,
        iterations: usize,
    },

    #[error(
        "weight function w must be identically 1 for this operation (deviation {deviation:e})"
    )]
    WeightNotUnit { deviation: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
