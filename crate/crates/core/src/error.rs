use alloc::boxed::Box;
use alloc::string::String;

use crate::solver::FitResult;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An exponent argument left the representable range; the iterate has diverged.
    #[error("exponent argument {argument} exceeds the safe bound of {bound}")]
    Overflow { argument: f64, bound: f64 },

    /// The line search could not produce a descent step after an overflow was
    /// signalled. Carries the last accepted iterate.
    #[error("line search exhausted after overflow at iteration {}", .0.iterations)]
    Divergence(Box<FitResult>),

    /// An argument was outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("the exact-quantile rule requires the true coefficient vector")]
    MissingOracle,

    #[error("column {column} has zero variance")]
    DegenerateColumn { column: usize },

    #[error("Poisson rate {rate} exceeds the sampler bound {bound}")]
    RateOverflow { rate: f64, bound: f64 },

    #[error("the true coefficient vector has empty support")]
    EmptySupport,

    #[error("every lambda on the grid failed on at least one fold")]
    AllLambdasFailed,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = core::result::Result<T, Error>;
