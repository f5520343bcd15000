//! Empirical checks of the deterministic l1 error bound and the restricted
//! eigenvalue condition it assumes.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math;
use crate::objective::{weighted_gradient, ObjectiveKind, Smooth};
use crate::problem::{Coefficients, ModelProblem};
use crate::rng::stream_rng;
use crate::solver::FitResult;

/// Constants entering the error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    /// Restricted eigenvalue estimate.
    pub kappa: f64,
    /// Cone constant `L = (c + 1) / (c - 1)`.
    pub cone_constant: f64,
    /// `R = max_ij |x_ij|`.
    pub design_bound: f64,
    /// Upper end of the bound's constant range.
    pub c_bound: f64,
}

impl TheoryConstants {
    pub fn new(kappa: f64, tuning_c: f64, problem: &ModelProblem) -> Result<Self> {
        Ok(Self {
            kappa,
            cone_constant: cone_constant(tuning_c)?,
            design_bound: problem.x().max_abs(),
            c_bound: 3.0,
        })
    }

    /// The multiplier `c` implied by the cone constant.
    pub fn tuning_c(&self) -> f64 {
        (self.cone_constant + 1.0) / (self.cone_constant - 1.0)
    }
}

/// `(c + 1) / (c - 1)` for `c > 1`.
pub fn cone_constant(tuning_c: f64) -> Result<f64> {
    if !(tuning_c > 1.0 && tuning_c.is_finite()) {
        return Err(Error::Domain(format!("tuning multiplier must exceed 1, got {tuning_c}")));
    }
    Ok((tuning_c + 1.0) / (tuning_c - 1.0))
}

/// Sampled estimate of the restricted eigenvalue `kappa`.
///
/// Each sample draws `d_T` uniformly on the unit sphere of the support and a
/// random direction `v` on the off-support coordinates with `|v|_1 = 1`.
/// The ratio `<d, H d> / |d_T|_2^2` along `d = d_T + r v` is a quadratic in
/// `r`, and is minimized exactly over the cone segment `0 <= r <= L |d_T|_1`.
/// The estimate is the square root of the smallest ratio seen; being a
/// minimum over a finite sample it can only overestimate the true `kappa`,
/// and it is non-increasing in `L` for a fixed seed.
pub fn restricted_eigenvalue_estimate(
    problem: &ModelProblem,
    beta_star: &Coefficients,
    cone_constant: f64,
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    problem.check_len(beta_star.as_slice())?;
    let support = beta_star.support();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if num_samples < 1000 {
        return Err(Error::Domain(format!("need at least 1000 cone samples, got {num_samples}")));
    }
    if !(cone_constant >= 0.0) {
        return Err(Error::Domain(format!("cone constant must be non-negative, got {cone_constant}")));
    }
    let p = problem.p();
    let off: Vec<usize> = (0..p).filter(|j| beta_star[*j] == 0.0).collect();
    let smooth = Smooth::new(problem, ObjectiveKind::Weighted);
    let eta = smooth.eta(beta_star.as_slice())?;
    let w = smooth.hessian_weights(&eta);
    let x = problem.x();
    let n = problem.n();

    let mut rng = stream_rng(seed, 0);
    let mut xt = alloc::vec![0.0; n];
    let mut xv = alloc::vec![0.0; n];
    let mut dt = alloc::vec![0.0; support.len()];
    let mut v = alloc::vec![0.0; off.len()];
    let mut best = f64::INFINITY;

    for _ in 0..num_samples {
        for d in dt.iter_mut() {
            *d = rng.sample(StandardNormal);
        }
        let norm2 = math::sqrt(math::dot(&dt, &dt));
        if norm2 == 0.0 {
            continue;
        }
        for d in dt.iter_mut() {
            *d /= norm2;
        }
        let dt_l1 = math::norm_l1(&dt);
        for (i, t) in xt.iter_mut().enumerate() {
            let row = x.row(i);
            *t = support.iter().zip(&dt).map(|(&j, d)| row[j] * d).sum();
        }
        let a: f64 = w.iter().zip(&xt).map(|(w, t)| w * t * t).sum();
        let mut ratio = a;
        if !off.is_empty() {
            for c in v.iter_mut() {
                *c = rng.sample(StandardNormal);
            }
            let l1 = math::norm_l1(&v);
            if l1 > 0.0 {
                for c in v.iter_mut() {
                    *c /= l1;
                }
                for (i, t) in xv.iter_mut().enumerate() {
                    let row = x.row(i);
                    *t = off.iter().zip(&v).map(|(&j, c)| row[j] * c).sum();
                }
                let b: f64 = w.iter().zip(xt.iter().zip(&xv)).map(|(w, (t, u))| w * t * u).sum();
                let c: f64 = w.iter().zip(&xv).map(|(w, u)| w * u * u).sum();
                let r_max = cone_constant * dt_l1;
                let r = if c > 0.0 { (-b / c).clamp(0.0, r_max) } else if b < 0.0 { r_max } else { 0.0 };
                ratio = a + 2.0 * r * b + r * r * c;
            }
        }
        best = best.min(ratio);
    }
    Ok(math::sqrt(best.max(0.0)))
}

/// Outcome of checking one fit against the deterministic error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// `H = |grad f(beta*)|_inf` for this realization.
    pub sup_score: f64,
    /// `lambda > c H`.
    pub lambda_dominates: bool,
    /// `lambda s <= 2 kappa^2 / (3 L (1 + L) R)`.
    pub smallness_condition: bool,
    pub l1_error: f64,
    pub l1_bound: f64,
    pub objective_gap: f64,
    pub objective_bound: f64,
    /// `|delta_{T^c}|_1`.
    pub cone_off_support: f64,
    /// `L |delta_T|_1`.
    pub cone_on_support: f64,
}

/// Slack allowed in the cone inequality.
pub const CONE_SLACK: f64 = 1e-8;

impl BoundReport {
    /// `lambda > c H`; the bounds claim nothing otherwise.
    pub fn covered(&self) -> bool {
        self.lambda_dominates
    }

    /// Both side conditions of the bound held.
    pub fn fully_covered(&self) -> bool {
        self.lambda_dominates && self.smallness_condition
    }

    pub fn cone_holds(&self) -> bool {
        self.cone_off_support <= self.cone_on_support + CONE_SLACK
    }

    pub fn l1_holds(&self) -> bool {
        self.l1_error <= self.l1_bound
    }

    pub fn objective_holds(&self) -> bool {
        self.objective_gap <= self.objective_bound
    }
}

/// Evaluates the l1 bound `C L (1 + L) lambda s / kappa^2` and objective bound
/// `C L (1 + L) lambda^2 s / kappa^2` against a fit of the weighted score
/// objective, together with the side conditions and the cone inequality.
pub fn verify_error_bound(
    problem: &ModelProblem,
    beta_star: &Coefficients,
    fit: &FitResult,
    lambda: f64,
    constants: &TheoryConstants,
) -> Result<BoundReport> {
    problem.check_len(beta_star.as_slice())?;
    problem.check_len(fit.beta_hat.as_slice())?;
    let l = constants.cone_constant;
    let c = constants.tuning_c();
    let s = beta_star.support_size() as f64;
    let kappa2 = constants.kappa * constants.kappa;

    let sup_score = math::norm_inf(&weighted_gradient(problem, beta_star)?);
    let lambda_dominates = lambda > c * sup_score;
    let smallness_condition =
        lambda * s <= 2.0 * kappa2 / (3.0 * l * (1.0 + l) * constants.design_bound);

    let delta = fit.beta_hat.sub(beta_star);
    let (mut on, mut off) = (0.0, 0.0);
    for (j, d) in delta.as_slice().iter().enumerate() {
        if beta_star[j] != 0.0 {
            on += d.abs();
        } else {
            off += d.abs();
        }
    }
    let factor = constants.c_bound * l * (1.0 + l) / kappa2;

    let smooth = Smooth::new(problem, ObjectiveKind::Weighted);
    let f_hat = smooth.value(&smooth.eta(fit.beta_hat.as_slice())?);
    let f_star = smooth.value(&smooth.eta(beta_star.as_slice())?);

    Ok(BoundReport {
        sup_score,
        lambda_dominates,
        smallness_condition,
        l1_error: delta.l1_norm(),
        l1_bound: factor * lambda * s,
        objective_gap: (f_hat - f_star).abs(),
        objective_bound: factor * lambda * lambda * s,
        cone_off_support: off,
        cone_on_support: l * on,
    })
}
