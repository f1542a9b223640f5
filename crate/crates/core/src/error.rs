use thiserror::Error;

/// Errors raised by the operators, chains and oracles of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point is not on the simplex: {0}")]
    NotOnSimplex(String),

    #[error("lattice with {size} states exceeds the cap of {cap}; use the Monte-Carlo route")]
    LatticeTooLarge { size: u128, cap: u64 },

    #[error("mutated coordinate {index} is negative ({value:e}); q_n is too large for this point")]
    NegativeCoordinate { index: usize, value: f64 },

    #[error("invalid mutation rates: {0}")]
    InvalidRates(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("function does not provide a {0}")]
    MissingDerivative(&'static str),

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("moment order {0} is not supported here")]
    UnsupportedOrder(usize),

    #[error("size {size} exceeds the configured cap of {cap}")]
    CapExceeded { size: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
