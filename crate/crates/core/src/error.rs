use thiserror::Error;

/// Errors raised anywhere in the approximation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("index {index} is beyond the oracle horizon (last valid index {last})")]
    OutOfHorizon { index: usize, last: usize },

    #[error("bound needs a probabilistic oracle whose values sum to 1")]
    UnsupportedBound,

    #[error("noise decay exponent p = {0} must be at least 2")]
    InvalidNoiseExponent(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("root {root} has relative residual {residual:e} above {tolerance:e}")]
    RootResidual {
        root: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("partial fraction recombination residual {residual:e} exceeds {tolerance:e}")]
    DecompositionFailed { residual: f64, tolerance: f64 },

    #[error("pole multiplicity {0} exceeds the supported maximum of 4")]
    MultiplicityTooHigh(usize),

    #[error("no pole lies strictly inside the unit disc; the approximant is zero")]
    EmptyProjection,

    #[error("denominator must be monic, leading coefficient is {0}")]
    NonMonicDenominator(f64),

    #[error("symbol has degree {actual} but {expected} states were requested")]
    DegreeMismatch { expected: usize, actual: usize },

    #[error("leading Hankel block has numerical rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("Schmidt vector is numerically zero")]
    ZeroSchmidtVector,

    #[error("eigen decomposition failed: {0}")]
    EigenFailure(String),

    #[error("cannot certify tail: {0}")]
    UncertifiableTail(String),
}

pub type Result<T> = std::result::Result<T, Error>;
