//! Orthant-wise limited-memory quasi-Newton (OWL-QN).

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::{check_inputs, kkt_from_gradient, FitResult, SolverConfig};
use crate::error::{Error, Result};
use crate::math;
use crate::objective::{penalty, penalty_delta, ObjectiveKind, ObjectiveValue, Smooth};
use crate::problem::{Coefficients, ModelProblem};

/// Pseudo-gradient of `smooth + sum_j levels_j |beta_j|`. At a zero
/// coordinate the one-sided derivative of steeper descent is used, or zero
/// when the subdifferential contains 0.
fn pseudo_gradient(beta: &[f64], grad: &[f64], levels: &[f64]) -> Vec<f64> {
    beta.iter()
        .zip(grad)
        .zip(levels)
        .map(|((&b, &g), &l)| {
            if b > 0.0 {
                g + l
            } else if b < 0.0 {
                g - l
            } else if g + l < 0.0 {
                g + l
            } else if g - l > 0.0 {
                g - l
            } else {
                0.0
            }
        })
        .collect()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: returns `-H v` for the current inverse-Hessian approximation.
fn two_loop(history: &VecDeque<Pair>, v: &[f64]) -> Vec<f64> {
    let mut q: Vec<f64> = v.to_vec();
    let mut alpha = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let a = pair.rho * math::dot(&pair.s, &q);
        for (qi, yi) in q.iter_mut().zip(&pair.y) {
            *qi -= a * yi;
        }
        alpha.push(a);
    }
    if let Some(last) = history.back() {
        let gamma = math::dot(&last.s, &last.y) / math::dot(&last.y, &last.y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for (pair, a) in history.iter().zip(alpha.into_iter().rev()) {
        let b = pair.rho * math::dot(&pair.y, &q);
        for (qi, si) in q.iter_mut().zip(&pair.s) {
            *qi += (a - b) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

/// Minimizes `smooth(beta) + lambda * sum_j w_j |beta_j|` by OWL-QN.
///
/// Every accepted step strictly decreases the objective and never moves a
/// coordinate across zero: coordinates leaving the chosen orthant are
/// clipped to zero. An overflowing trial point counts as a failed trial and
/// the step is shortened. If the line search is exhausted after an overflow
/// and no steepest-descent retry helps, [`Error::Divergence`] carries the
/// last accepted iterate.
pub fn fit_owlqn(
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
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(config.memory);
    let mut iterations = 0;
    let mut kkt = kkt_from_gradient(&beta, &grad, &levels);
    let mut overflow_seen = false;

    while kkt > config.tol_kkt && iterations < config.max_iters {
        let pg = pseudo_gradient(&beta, &grad, &levels);
        let neg_pg: Vec<f64> = pg.iter().map(|v| -v).collect();

        let mut direction = two_loop(&history, &pg);
        // A zero coordinate may only leave zero towards steepest descent.
        // Nonzero coordinates keep their quasi-Newton component; the
        // projection in the line search stops them at zero.
        for ((d, g), b) in direction.iter_mut().zip(&pg).zip(&beta) {
            if *b == 0.0 && *d * *g >= 0.0 {
                *d = 0.0;
            }
        }
        if math::dot(&direction, &pg) >= 0.0 {
            history.clear();
            direction = neg_pg.clone();
        }

        let step = line_search(
            &smooth, &beta, &eta, &pg, &direction, history.is_empty(), lambda, weights, config,
            &mut overflow_seen,
        );
        let step = match step {
            Some(s) => Some(s),
            None if !history.is_empty() => {
                history.clear();
                line_search(
                    &smooth, &beta, &eta, &pg, &neg_pg, true, lambda, weights, config,
                    &mut overflow_seen,
                )
            }
            None => None,
        };

        let Some((cand, cand_eta, decrease)) = step else {
            if overflow_seen {
                let partial = finish(problem, kind, lambda, weights, beta, &grad, &levels, iterations, false, trace)?;
                return Err(Error::Divergence(Box::new(partial)));
            }
            break;
        };

        let cand_grad = smooth.gradient(&cand_eta);
        let s: Vec<f64> = cand.iter().zip(&beta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = cand_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = math::dot(&s, &y);
        if sy > 1e-12 * math::dot(&y, &y).max(f64::MIN_POSITIVE) && sy > 0.0 {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back(Pair { s, y, rho: 1.0 / sy });
        }

        beta = cand;
        eta = cand_eta;
        grad = cand_grad;
        total += decrease;
        iterations += 1;
        trace.push((iterations, total));
        kkt = kkt_from_gradient(&beta, &grad, &levels);
    }

    let converged = kkt <= config.tol_kkt;
    finish(problem, kind, lambda, weights, beta, &grad, &levels, iterations, converged, trace)
}

/// Backtracking along the projected ray. Returns the accepted point, its
/// linear predictor and the (negative) change in total objective.
#[allow(clippy::too_many_arguments)]
fn line_search(
    smooth: &Smooth<'_>,
    beta: &[f64],
    eta: &[f64],
    pg: &[f64],
    direction: &[f64],
    first_order: bool,
    lambda: f64,
    weights: Option<&[f64]>,
    config: &SolverConfig,
    overflow_seen: &mut bool,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let orthant: Vec<f64> = beta
        .iter()
        .zip(pg)
        .map(|(&b, &g)| if b != 0.0 { math::signum(b) } else { -math::signum(g) })
        .collect();
    let norm = math::sqrt(math::dot(direction, direction));
    if !(norm > 0.0) {
        return None;
    }
    let mut t = if first_order { (1.0 / norm).min(1.0) } else { 1.0 };

    for _ in 0..config.line_search_max {
        let cand: Vec<f64> = beta
            .iter()
            .zip(direction)
            .zip(&orthant)
            .map(|((&b, &d), &o)| {
                let v = b + t * d;
                if math::signum(v) == o { v } else { 0.0 }
            })
            .collect();
        let cand_eta = match smooth.eta(&cand) {
            Ok(e) => e,
            Err(_) => {
                *overflow_seen = true;
                t *= config.backtrack_factor;
                continue;
            }
        };
        let step: Vec<f64> = cand.iter().zip(beta).map(|(c, b)| c - b).collect();
        let d_eta = smooth.problem().x().mul_vec(&step);
        let decrease = smooth.delta(eta, &d_eta) + penalty_delta(beta, &cand, lambda, weights);
        let predicted: f64 = pg.iter().zip(cand.iter().zip(beta)).map(|(g, (c, b))| g * (c - b)).sum();
        if decrease.is_finite() && decrease < 0.0 && decrease <= config.armijo_c * predicted {
            return Some((cand, cand_eta, decrease));
        }
        if !decrease.is_finite() {
            *overflow_seen = true;
        }
        t *= config.backtrack_factor;
    }
    None
}

#[allow(clippy::too_many_arguments)]
pub(super) fn finish(
    problem: &ModelProblem,
    kind: ObjectiveKind,
    lambda: f64,
    weights: Option<&[f64]>,
    beta: Vec<f64>,
    grad: &[f64],
    levels: &[f64],
    iterations: usize,
    converged: bool,
    trace: Vec<(usize, f64)>,
) -> Result<FitResult> {
    let smooth = Smooth::new(problem, kind);
    let eta = smooth.eta(&beta)?;
    let objective = ObjectiveValue::new(smooth.value(&eta), penalty(&beta, lambda, weights));
    let kkt_residual = kkt_from_gradient(&beta, grad, levels);
    Ok(FitResult {
        beta_hat: Coefficients::new(beta),
        objective,
        kkt_residual,
        iterations,
        converged,
        trace,
    })
}
