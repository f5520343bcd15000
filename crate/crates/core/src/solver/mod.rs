//! Composite smooth + l1 minimization.
//!
//! [`fit_owlqn`] is the primary solver; [`fit_proximal`] is a plain ISTA
//! solver kept as an independent cross-check. Both certify convergence by
//! the KKT residual of the returned iterate.

mod owlqn;
mod proximal;

use alloc::format;
use alloc::vec::Vec;

pub use owlqn::fit_owlqn;
pub use proximal::fit_proximal;

use crate::error::{Error, Result};
use crate::math;
use crate::objective::{smooth_gradient, ObjectiveKind, ObjectiveValue};
use crate::problem::{Coefficients, ModelProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol_kkt: f64,
    /// L-BFGS history length.
    pub memory: usize,
    pub line_search_max: usize,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
    /// Per-coordinate multipliers of `lambda`. `None` means all ones.
    pub penalty_weights: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol_kkt: 1e-7,
            memory: 10,
            line_search_max: 50,
            backtrack_factor: 0.5,
            armijo_c: 1e-4,
            penalty_weights: None,
        }
    }
}

impl SolverConfig {
    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol_kkt(mut self, tol: f64) -> Self {
        self.tol_kkt = tol;
        self
    }

    pub fn with_penalty_weights(mut self, weights: Vec<f64>) -> Self {
        self.penalty_weights = Some(weights);
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::Domain(format!("solver config: {what}")));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.tol_kkt > 0.0) {
            return bad("tol_kkt must be positive");
        }
        if self.memory == 0 {
            return bad("memory must be positive");
        }
        if self.line_search_max == 0 {
            return bad("line_search_max must be positive");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if let Some(w) = &self.penalty_weights {
            if w.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: w.len(),
                });
            }
            if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return bad("penalty weights must be finite and non-negative");
            }
        }
        Ok(())
    }

    /// Per-coordinate penalty levels `lambda * w_j`.
    pub(crate) fn penalty_levels(&self, lambda: f64, p: usize) -> Vec<f64> {
        match &self.penalty_weights {
            Some(w) => w.iter().map(|w| lambda * w).collect(),
            None => alloc::vec![lambda; p],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: Coefficients,
    pub objective: ObjectiveValue,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(iteration, total objective)` after every accepted step, starting at 0.
    pub trace: Vec<(usize, f64)>,
}

/// Proximal operator of `t |.|`.
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Sup-norm violation of the subgradient optimality condition, given the
/// smooth gradient and per-coordinate penalty levels.
pub(crate) fn kkt_from_gradient(beta: &[f64], grad: &[f64], levels: &[f64]) -> f64 {
    beta.iter()
        .zip(grad)
        .zip(levels)
        .map(|((&b, &g), &l)| {
            if b != 0.0 {
                (g + l * math::signum(b)).abs()
            } else {
                (g.abs() - l).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// KKT residual of `smooth(beta) + lambda * ||beta||_1`; zero exactly at a minimizer.
pub fn kkt_residual(
    problem: &ModelProblem,
    kind: ObjectiveKind,
    beta: &Coefficients,
    lambda: f64,
) -> Result<f64> {
    kkt_residual_weighted(problem, kind, beta, lambda, None)
}

/// [`kkt_residual`] with per-coordinate penalty weights.
pub fn kkt_residual_weighted(
    problem: &ModelProblem,
    kind: ObjectiveKind,
    beta: &Coefficients,
    lambda: f64,
    weights: Option<&[f64]>,
) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("lambda must be non-negative, got {lambda}")));
    }
    let g = smooth_gradient(problem, kind, beta)?;
    let levels: Vec<f64> = match weights {
        Some(w) => w.iter().map(|w| lambda * w).collect(),
        None => alloc::vec![lambda; g.len()],
    };
    Ok(kkt_from_gradient(beta.as_slice(), &g, &levels))
}

/// Shared argument checks of both solvers.
pub(crate) fn check_inputs(
    problem: &ModelProblem,
    lambda: f64,
    config: &SolverConfig,
    beta_init: &Coefficients,
) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be finite and non-negative, got {lambda}")));
    }
    config.validate(problem.p())?;
    problem.check_len(beta_init.as_slice())?;
    if !beta_init.is_finite() {
        return Err(Error::Domain("initial coefficients must be finite".into()));
    }
    Ok(())
}
