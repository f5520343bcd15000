//! l1-penalized Poisson log-likelihood with K-fold cross-validated lambda.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::math;
use crate::objective::{loglik_gradient, ObjectiveKind, EXP_GUARD};
use crate::problem::{Coefficients, ModelProblem};
use crate::rng::stream_rng;
use crate::solver::{fit_owlqn, FitResult, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaGrid {
    /// `points` log-spaced values from `lambda_max` down to `min_ratio * lambda_max`.
    Auto { points: usize, min_ratio: f64 },
    /// Explicit, strictly descending, positive.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub lambda_grid: LambdaGrid,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            lambda_grid: LambdaGrid::Auto {
                points: 50,
                min_ratio: 1e-3,
            },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvPoint {
    pub lambda: f64,
    /// Mean held-out deviance per observation; `None` if a fold fit failed.
    pub mean_deviance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best_lambda: f64,
    pub curve: Vec<CvPoint>,
}

/// Smallest lambda at which the origin is optimal: `|grad l(0)|_inf`.
pub fn lambda_max(problem: &ModelProblem) -> f64 {
    loglik_gradient(problem, &Coefficients::zeros(problem.p()))
        .map(|g| math::norm_inf(&g))
        .unwrap_or(0.0)
}

pub fn log_spaced_grid(top: f64, points: usize, min_ratio: f64) -> Result<Vec<f64>> {
    if !(top > 0.0) || points == 0 || !(min_ratio > 0.0 && min_ratio < 1.0) {
        return Err(Error::Domain(format!(
            "invalid grid: top={top}, points={points}, min_ratio={min_ratio}"
        )));
    }
    if points == 1 {
        return Ok(alloc::vec![top]);
    }
    let step = math::ln(min_ratio) / (points - 1) as f64;
    Ok((0..points).map(|k| top * math::exp(step * k as f64)).collect())
}

/// Poisson deviance `2 sum_i [y_i ln(y_i / mu_i) - (y_i - mu_i)]`, with `0 ln 0 = 0`.
pub fn poisson_deviance(y: &[f64], mu: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(mu)
        .map(|(&yi, &mi)| {
            let lead = if yi > 0.0 { yi * math::ln(yi / mi) } else { 0.0 };
            lead - (yi - mi)
        })
        .sum::<f64>()
}

/// l1-penalized Poisson regression from the origin.
pub fn fit_poisson_lasso(problem: &ModelProblem, lambda: f64, config: &SolverConfig) -> Result<FitResult> {
    fit_owlqn(problem, ObjectiveKind::LogLik, lambda, config, &Coefficients::zeros(problem.p()))
}

/// Fold label of every row: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, 0));
    let mut label = alloc::vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        label[row] = pos % folds;
    }
    label
}

fn held_out_deviance(test: &ModelProblem, beta: &Coefficients) -> Option<f64> {
    let eta = test.x().mul_vec(beta.as_slice());
    if eta.iter().any(|e| !(e.abs() <= EXP_GUARD)) {
        return None;
    }
    let mu: Vec<f64> = eta.iter().map(|&e| math::exp(e)).collect();
    let d = poisson_deviance(test.y(), &mu) / test.n() as f64;
    d.is_finite().then_some(d)
}

fn ok_fit(result: Result<FitResult>) -> Option<FitResult> {
    match result {
        Ok(fit) if fit.converged => Some(fit),
        _ => None,
    }
}

/// K-fold cross-validation over a descending lambda grid.
///
/// Within each fold the fits are warm-started down the grid. A fit that
/// diverges or fails to converge marks its lambda as failed; since later
/// grid points would be warm-started from it, the rest of that fold's path
/// is marked failed too. The best lambda minimizes mean held-out deviance
/// among lambdas that succeeded on every fold.
pub fn cross_validate(
    problem: &ModelProblem,
    cv: &CvConfig,
    solver: &SolverConfig,
) -> Result<CvOutcome> {
    let n = problem.n();
    if cv.folds < 2 {
        return Err(Error::Domain(format!("need at least 2 folds, got {}", cv.folds)));
    }
    if n < cv.folds {
        return Err(Error::Domain(format!("{n} rows cannot fill {} folds", cv.folds)));
    }
    let grid = match &cv.lambda_grid {
        LambdaGrid::Auto { points, min_ratio } => log_spaced_grid(lambda_max(problem), *points, *min_ratio)?,
        LambdaGrid::Explicit(g) => {
            if g.is_empty() || g.iter().any(|l| !(*l > 0.0)) || g.windows(2).any(|w| !(w[0] > w[1])) {
                return Err(Error::Domain("lambda grid must be positive and strictly descending".into()));
            }
            g.clone()
        }
    };

    let labels = fold_assignment(n, cv.folds, cv.seed);
    let mut sums = alloc::vec![0.0; grid.len()];
    let mut failed = alloc::vec![false; grid.len()];

    for fold in 0..cv.folds {
        let train_rows: Vec<usize> = (0..n).filter(|&i| labels[i] != fold).collect();
        let test_rows: Vec<usize> = (0..n).filter(|&i| labels[i] == fold).collect();
        let train = problem.subset(&train_rows)?;
        let test = problem.subset(&test_rows)?;
        let mut warm = Coefficients::zeros(problem.p());
        let mut broken = false;
        for (k, &lambda) in grid.iter().enumerate() {
            if broken {
                failed[k] = true;
                continue;
            }
            let dev = ok_fit(fit_owlqn(&train, ObjectiveKind::LogLik, lambda, solver, &warm))
                .and_then(|fit| {
                    let d = held_out_deviance(&test, &fit.beta_hat);
                    warm = fit.beta_hat;
                    d
                });
            match dev {
                Some(d) => sums[k] += d,
                None => {
                    failed[k] = true;
                    broken = true;
                }
            }
        }
    }

    let curve: Vec<CvPoint> = grid
        .iter()
        .zip(sums.iter().zip(&failed))
        .map(|(&lambda, (&s, &f))| CvPoint {
            lambda,
            mean_deviance: (!f).then_some(s / cv.folds as f64),
        })
        .collect();
    let best = curve
        .iter()
        .filter_map(|pt| pt.mean_deviance.map(|d| (pt.lambda, d)))
        .fold(None, |acc: Option<(f64, f64)>, (l, d)| match acc {
            Some((_, bd)) if bd <= d => acc,
            _ => Some((l, d)),
        });
    match best {
        Some((best_lambda, _)) => Ok(CvOutcome { best_lambda, curve }),
        None => Err(Error::AllLambdasFailed),
    }
}
