//! Sparse Poisson regression by the l1-penalized weighted score (LPWS).
//!
//! The estimator minimizes
//!
//! ```text
//! (1/n) sum_i (y_i exp(-x_i^T b / 2) + exp(x_i^T b / 2)) + lambda |b|_1
//! ```
//!
//! whose smooth part has the variance-standardized Poisson score as its
//! gradient, so `lambda` can be fixed from `(n, p, alpha, c)` alone. The
//! crate also carries the l1-penalized log-likelihood baseline, the tuning
//! rules, an exact Poisson sampler and empirical checks of the error bound.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baseline;
mod error;
mod math;
pub mod objective;
pub mod problem;
pub mod rng;
pub mod simulation;
pub mod solver;
pub mod tuning;

pub use error::{Error, Result};
pub use objective::{ObjectiveKind, ObjectiveValue};
pub use problem::{Coefficients, Design, ModelProblem};
pub use solver::{FitResult, SolverConfig};
