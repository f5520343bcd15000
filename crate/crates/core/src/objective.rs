//! Exact evaluation of the two smooth objectives and their derivatives.
//!
//! With linear predictor `eta_i = x_i^T beta`:
//!
//! * weighted score objective `f(beta) = (1/n) sum_i (y_i exp(-eta_i/2) + exp(eta_i/2))`,
//!   whose gradient is the weighted score `-(1/2n) sum_i x_i (y_i - mu_i) / sqrt(mu_i)`;
//! * Poisson negative log-likelihood `l(beta) = (1/n) sum_i (-y_i eta_i + exp(eta_i))`.
//!
//! Both are convex. The Hessian of `f` is `(1/4n) sum_i x_i x_i^T (y_i exp(-eta_i/2) + exp(eta_i/2))`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::problem::{Coefficients, ModelProblem};

/// Largest exponent argument accepted before an iterate is declared divergent.
pub const EXP_GUARD: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    /// l1-penalized weighted score.
    Weighted,
    /// l1-penalized Poisson log-likelihood.
    LogLik,
}

impl ObjectiveKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Weighted => "weighted",
            ObjectiveKind::LogLik => "loglik",
        }
    }
}

impl core::str::FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted" => Ok(ObjectiveKind::Weighted),
            "loglik" => Ok(ObjectiveKind::LogLik),
            other => Err(Error::Domain(alloc::format!("unknown objective '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub smooth: f64,
    pub penalty: f64,
    pub total: f64,
}

impl ObjectiveValue {
    pub fn new(smooth: f64, penalty: f64) -> Self {
        Self {
            smooth,
            penalty,
            total: smooth + penalty,
        }
    }
}

/// `lambda * sum_j w_j |beta_j|`, with unit weights when none are given.
pub fn penalty(beta: &[f64], lambda: f64, weights: Option<&[f64]>) -> f64 {
    match weights {
        Some(w) => lambda * beta.iter().zip(w).map(|(b, w)| w * b.abs()).sum::<f64>(),
        None => lambda * math::norm_l1(beta),
    }
}

/// Smooth part of one objective bound to a problem. Evaluations are split
/// into the linear predictor and functions of it so the solvers can reuse
/// `eta` across value, gradient and line-search differences.
#[derive(Debug, Clone, Copy)]
pub struct Smooth<'a> {
    problem: &'a ModelProblem,
    kind: ObjectiveKind,
}

impl<'a> Smooth<'a> {
    pub fn new(problem: &'a ModelProblem, kind: ObjectiveKind) -> Self {
        Self { problem, kind }
    }

    pub fn problem(&self) -> &'a ModelProblem {
        self.problem
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    /// Linear predictor `X beta`, rejecting iterates whose exponents overflow.
    pub fn eta(&self, beta: &[f64]) -> Result<Vec<f64>> {
        self.problem.check_len(beta)?;
        let eta = self.problem.x().mul_vec(beta);
        self.check_eta(&eta)?;
        Ok(eta)
    }

    fn check_eta(&self, eta: &[f64]) -> Result<()> {
        let scale = match self.kind {
            ObjectiveKind::Weighted => 0.5,
            ObjectiveKind::LogLik => 1.0,
        };
        for &e in eta {
            let arg = (e * scale).abs();
            if !(arg <= EXP_GUARD) {
                return Err(Error::Overflow {
                    argument: e * scale,
                    bound: EXP_GUARD,
                });
            }
        }
        Ok(())
    }

    pub fn value(&self, eta: &[f64]) -> f64 {
        let y = self.problem.y();
        let n = y.len() as f64;
        let sum: f64 = match self.kind {
            ObjectiveKind::Weighted => eta
                .iter()
                .zip(y)
                .map(|(&e, &yi)| {
                    let h = math::exp(0.5 * e);
                    yi / h + h
                })
                .sum(),
            ObjectiveKind::LogLik => eta
                .iter()
                .zip(y)
                .map(|(&e, &yi)| -yi * e + math::exp(e))
                .sum(),
        };
        sum / n
    }

    /// Per-observation derivative of the smooth loss with respect to `eta_i`,
    /// already divided by `n`. The gradient is `X^T` of this vector.
    fn residual_weights(&self, eta: &[f64]) -> Vec<f64> {
        let y = self.problem.y();
        let n = y.len() as f64;
        match self.kind {
            ObjectiveKind::Weighted => eta
                .iter()
                .zip(y)
                .map(|(&e, &yi)| {
                    let h = math::exp(0.5 * e);
                    0.5 * (h - yi / h) / n
                })
                .collect(),
            ObjectiveKind::LogLik => eta
                .iter()
                .zip(y)
                .map(|(&e, &yi)| (math::exp(e) - yi) / n)
                .collect(),
        }
    }

    pub fn gradient(&self, eta: &[f64]) -> Vec<f64> {
        self.problem.x().tmul_vec(&self.residual_weights(eta))
    }

    /// Weights `w_i` with `<d, H d> = sum_i w_i (x_i^T d)^2`.
    pub fn hessian_weights(&self, eta: &[f64]) -> Vec<f64> {
        let y = self.problem.y();
        let n = y.len() as f64;
        match self.kind {
            ObjectiveKind::Weighted => eta
                .iter()
                .zip(y)
                .map(|(&e, &yi)| {
                    let h = math::exp(0.5 * e);
                    0.25 * (yi / h + h) / n
                })
                .collect(),
            ObjectiveKind::LogLik => eta.iter().map(|&e| math::exp(e) / n).collect(),
        }
    }

    /// `value(eta_old + d_eta) - value(eta_old)` evaluated term by term
    /// through `expm1`. Passing the increment directly (rather than two
    /// predictors to subtract) keeps full relative accuracy for tiny steps.
    pub fn delta(&self, eta_old: &[f64], d_eta: &[f64]) -> f64 {
        let y = self.problem.y();
        let n = y.len() as f64;
        let sum: f64 = match self.kind {
            ObjectiveKind::Weighted => eta_old
                .iter()
                .zip(d_eta)
                .zip(y)
                .map(|((&a, &de), &yi)| {
                    let d = 0.5 * de;
                    let mut t = math::exp(0.5 * a) * math::expm1(d);
                    if yi != 0.0 {
                        t += yi * math::exp(-0.5 * a) * math::expm1(-d);
                    }
                    t
                })
                .sum(),
            ObjectiveKind::LogLik => eta_old
                .iter()
                .zip(d_eta)
                .zip(y)
                .map(|((&a, &d), &yi)| -yi * d + math::exp(a) * math::expm1(d))
                .sum(),
        };
        sum / n
    }
}

/// `penalty(new) - penalty(old)` summed coordinate-wise.
pub(crate) fn penalty_delta(old: &[f64], new: &[f64], lambda: f64, weights: Option<&[f64]>) -> f64 {
    let mut acc = 0.0;
    for (j, (a, b)) in old.iter().zip(new).enumerate() {
        let w = weights.map_or(1.0, |w| w[j]);
        acc += w * (b.abs() - a.abs());
    }
    lambda * acc
}

fn evaluate(
    problem: &ModelProblem,
    kind: ObjectiveKind,
    beta: &Coefficients,
    lambda: f64,
) -> Result<ObjectiveValue> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(alloc::format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    let smooth = Smooth::new(problem, kind);
    let eta = smooth.eta(beta.as_slice())?;
    let value = smooth.value(&eta);
    if !value.is_finite() {
        return Err(Error::Overflow {
            argument: value,
            bound: EXP_GUARD,
        });
    }
    Ok(ObjectiveValue::new(value, penalty(beta.as_slice(), lambda, None)))
}

/// Penalized objective of either kind.
pub fn objective(
    problem: &ModelProblem,
    kind: ObjectiveKind,
    beta: &Coefficients,
    lambda: f64,
) -> Result<ObjectiveValue> {
    evaluate(problem, kind, beta, lambda)
}

/// Gradient of the smooth part of either objective.
pub fn smooth_gradient(
    problem: &ModelProblem,
    kind: ObjectiveKind,
    beta: &Coefficients,
) -> Result<Vec<f64>> {
    let smooth = Smooth::new(problem, kind);
    let eta = smooth.eta(beta.as_slice())?;
    Ok(smooth.gradient(&eta))
}

pub fn weighted_objective(
    problem: &ModelProblem,
    beta: &Coefficients,
    lambda: f64,
) -> Result<ObjectiveValue> {
    evaluate(problem, ObjectiveKind::Weighted, beta, lambda)
}

pub fn weighted_gradient(problem: &ModelProblem, beta: &Coefficients) -> Result<Vec<f64>> {
    smooth_gradient(problem, ObjectiveKind::Weighted, beta)
}

pub fn loglik_objective(
    problem: &ModelProblem,
    beta: &Coefficients,
    lambda: f64,
) -> Result<ObjectiveValue> {
    evaluate(problem, ObjectiveKind::LogLik, beta, lambda)
}

pub fn loglik_gradient(problem: &ModelProblem, beta: &Coefficients) -> Result<Vec<f64>> {
    smooth_gradient(problem, ObjectiveKind::LogLik, beta)
}

/// `<delta, grad^2 f(beta) delta>` for the weighted score objective.
///
/// The constant is `1/(4n)`, from differentiating `f` twice.
pub fn hessian_quadratic_form(
    problem: &ModelProblem,
    beta: &Coefficients,
    delta: &[f64],
) -> Result<f64> {
    problem.check_len(delta)?;
    let smooth = Smooth::new(problem, ObjectiveKind::Weighted);
    let eta = smooth.eta(beta.as_slice())?;
    let w = smooth.hessian_weights(&eta);
    let xd = problem.x().mul_vec(delta);
    Ok(w.iter().zip(&xd).map(|(w, t)| w * t * t).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Design;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn scalar(x: f64, y: f64) -> ModelProblem {
        ModelProblem::new(Design::from_row_major(1, 1, vec![x]).unwrap(), vec![y]).unwrap()
    }

    fn three_rows() -> ModelProblem {
        let x = Design::from_rows(&[vec![0.3, -1.0], vec![1.2, 0.4], vec![-0.7, 2.0]]).unwrap();
        ModelProblem::new(x, vec![2.0, 0.0, 4.0]).unwrap()
    }

    #[test]
    fn weighted_objective_at_origin() {
        let prob = three_rows();
        let zero = Coefficients::zeros(2);
        // (y_i + 1) averaged: (3 + 1 + 5) / 3.
        let v = weighted_objective(&prob, &zero, 0.0).unwrap();
        assert_relative_eq!(v.smooth, 3.0, max_relative = 1e-15);
        let v = weighted_objective(&prob, &zero, 0.5).unwrap();
        assert_relative_eq!(v.total, 3.0, max_relative = 1e-15);
        assert_eq!(v.penalty, 0.0);
    }

    #[test]
    fn weighted_objective_scalar() {
        let prob = scalar(1.0, 1.0);
        let v = weighted_objective(&prob, &Coefficients::new(vec![2.0]), 1.0).unwrap();
        let e = core::f64::consts::E;
        assert_relative_eq!(v.smooth, 1.0 / e + e, max_relative = 1e-14);
        assert_relative_eq!(v.smooth, 3.0861612696304874, max_relative = 1e-14);
        assert_relative_eq!(v.total, 5.086161269630487, max_relative = 1e-14);
        assert!((v.total - (v.smooth + v.penalty)).abs() <= 1e-12 * v.total.abs());
    }

    #[test]
    fn weighted_gradient_collapses() {
        let prob = scalar(1.0, 1.0);
        assert_eq!(weighted_gradient(&prob, &Coefficients::new(vec![0.0])).unwrap(), vec![0.0]);

        let prob = three_rows();
        let g = weighted_gradient(&prob, &Coefficients::zeros(2)).unwrap();
        let n = 3.0;
        for j in 0..2 {
            let expect: f64 = -(0..3)
                .map(|i| prob.x().get(i, j) * (prob.y()[i] - 1.0))
                .sum::<f64>()
                / (2.0 * n);
            assert_relative_eq!(g[j], expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn loglik_values() {
        let prob = three_rows();
        let v = loglik_objective(&prob, &Coefficients::zeros(2), 0.0).unwrap();
        assert_relative_eq!(v.smooth, 1.0, max_relative = 1e-15);
        let v = loglik_objective(&scalar(1.0, 2.0), &Coefficients::new(vec![1.0]), 0.0).unwrap();
        assert_relative_eq!(v.smooth, core::f64::consts::E - 2.0, max_relative = 1e-14);
        let v = loglik_objective(&prob, &Coefficients::new(vec![1.0, -1.0]), 1.0).unwrap();
        assert_eq!(v.penalty, 2.0);
    }

    #[test]
    fn loglik_gradient_zero_at_perfect_fit() {
        // y_i = exp(x_i beta) with beta = ln 2 on a unit column.
        let x = Design::from_row_major(3, 1, vec![1.0, 1.0, 1.0]).unwrap();
        let prob = ModelProblem::new(x, vec![2.0, 2.0, 2.0]).unwrap();
        let g = loglik_gradient(&prob, &Coefficients::new(vec![core::f64::consts::LN_2])).unwrap();
        assert!(g[0].abs() < 1e-15);
        let g0 = loglik_gradient(&prob, &Coefficients::zeros(1)).unwrap();
        assert_relative_eq!(g0[0], -1.0, max_relative = 1e-15);
    }

    #[test]
    fn hessian_form_collapses() {
        let prob = three_rows();
        let zero = Coefficients::zeros(2);
        assert_eq!(hessian_quadratic_form(&prob, &zero, &[0.0, 0.0]).unwrap(), 0.0);

        let ones = prob.with_response(vec![1.0, 1.0, 1.0]).unwrap();
        let d = [0.4, -1.1];
        let xd = ones.x().mul_vec(&d);
        let expect = xd.iter().map(|t| t * t).sum::<f64>() / 6.0;
        assert_relative_eq!(
            hessian_quadratic_form(&ones, &zero, &d).unwrap(),
            expect,
            max_relative = 1e-14
        );
    }

    #[test]
    fn overflow_is_signalled() {
        let prob = scalar(1.0, 1.0);
        let far = Coefficients::new(vec![1401.0]);
        assert!(matches!(weighted_objective(&prob, &far, 0.0), Err(Error::Overflow { .. })));
        assert!(matches!(weighted_gradient(&prob, &far), Err(Error::Overflow { .. })));
        let near = Coefficients::new(vec![1399.0]);
        assert!(weighted_objective(&prob, &near, 0.0).is_ok());
        assert!(matches!(
            loglik_objective(&prob, &Coefficients::new(vec![701.0]), 0.0),
            Err(Error::Overflow { .. })
        ));
        assert!(weighted_objective(&prob, &Coefficients::zeros(1), -1.0).is_err());
    }

    #[test]
    fn delta_matches_direct_difference() {
        let prob = three_rows();
        for kind in [ObjectiveKind::Weighted, ObjectiveKind::LogLik] {
            let s = Smooth::new(&prob, kind);
            let a = s.eta(&[0.2, -0.3]).unwrap();
            let b = s.eta(&[0.25, -0.1]).unwrap();
            let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y - x).collect();
            assert_relative_eq!(
                s.delta(&a, &d),
                s.value(&b) - s.value(&a),
                max_relative = 1e-12
            );
        }
    }
}
