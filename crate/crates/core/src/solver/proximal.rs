//! ISTA with backtracking on the smooth part.

use alloc::boxed::Box;
use alloc::vec::Vec;

use super::owlqn::finish;
use super::{check_inputs, kkt_from_gradient, soft_threshold, FitResult, SolverConfig};
use crate::error::{Error, Result};
use crate::math;
use crate::objective::{penalty, penalty_delta, ObjectiveKind, Smooth};
use crate::problem::{Coefficients, ModelProblem};

/// Minimizes the same composite objective as [`super::fit_owlqn`] by proximal
/// gradient steps `soft_threshold(beta - t g, t lambda_j)`.
///
/// A trial step is accepted when the smooth part satisfies the quadratic
/// upper bound `f(b+) <= f(b) + g^T (b+ - b) + |b+ - b|^2 / (2t)`, which
/// guarantees a strict decrease of the total objective. The step length
/// carries over between iterations and is allowed to grow by
/// `1 / backtrack_factor` before each search.
pub fn fit_proximal(
    problem: &ModelProblem,
    kind: ObjectiveKind,
    lambda: f64,
    config: &SolverConfig,
    beta_init: &Coefficients,
) -> Result<FitResult> {
    check_inputs(problem, lambda, config, beta_init)?;
    let p = problem.p();
    let smooth = Smooth::new(problem, kind);
    let levels = config.penalty_levels(lambda, p);
    let weights = config.penalty_weights.as_deref();

    let mut beta = beta_init.as_slice().to_vec();
    let mut eta = smooth.eta(&beta)?;
    let mut grad = smooth.gradient(&eta);
    let mut total = smooth.value(&eta) + penalty(&beta, lambda, weights);
    let mut trace = alloc::vec![(0, total)];
    let mut iterations = 0;
    let mut kkt = kkt_from_gradient(&beta, &grad, &levels);
    let mut step = 1.0 / math::norm_inf(&grad).max(1.0);

    while kkt > config.tol_kkt && iterations < config.max_iters {
        let mut t = step / config.backtrack_factor;
        let mut overflow_seen = false;
        let mut accepted = None;
        for _ in 0..config.line_search_max {
            let cand: Vec<f64> = beta
                .iter()
                .zip(&grad)
                .zip(&levels)
                .map(|((&b, &g), &l)| soft_threshold(b - t * g, t * l))
                .collect();
            let diff: Vec<f64> = cand.iter().zip(&beta).map(|(c, b)| c - b).collect();
            let diff_sq = math::dot(&diff, &diff);
            if diff_sq == 0.0 {
                break;
            }
            let cand_eta = match smooth.eta(&cand) {
                Ok(e) => e,
                Err(_) => {
                    overflow_seen = true;
                    t *= config.backtrack_factor;
                    continue;
                }
            };
            let df = smooth.delta(&eta, &problem.x().mul_vec(&diff));
            if df.is_finite() && df <= math::dot(&grad, &diff) + diff_sq / (2.0 * t) {
                let decrease = df + penalty_delta(&beta, &cand, lambda, weights);
                if decrease < 0.0 {
                    accepted = Some((cand, cand_eta, decrease));
                    break;
                }
            }
            t *= config.backtrack_factor;
        }

        let Some((cand, cand_eta, decrease)) = accepted else {
            if overflow_seen {
                let partial = finish(problem, kind, lambda, weights, beta, &grad, &levels, iterations, false, trace)?;
                return Err(Error::Divergence(Box::new(partial)));
            }
            break;
        };
        step = t;
        beta = cand;
        eta = cand_eta;
        grad = smooth.gradient(&eta);
        total += decrease;
        iterations += 1;
        trace.push((iterations, total));
        kkt = kkt_from_gradient(&beta, &grad, &levels);
    }

    let converged = kkt <= config.tol_kkt;
    finish(problem, kind, lambda, weights, beta, &grad, &levels, iterations, converged, trace)
}
