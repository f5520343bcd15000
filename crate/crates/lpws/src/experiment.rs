//! Simulation campaigns.
//!
//! Replication `r` draws its design, coefficients and responses from
//! streams of `derive_seed(seed, r)`, independent of the scale, so scales
//! share designs and coefficient directions. Work is split into chunks of
//! replications that run in parallel; results are emitted chunk by chunk in
//! replication order, so output never depends on the thread count and an
//! interrupted run leaves complete rows behind.

use std::time::Instant;

use lpws_core::baseline::{cross_validate, fit_poisson_lasso, CvConfig, LambdaGrid};
use lpws_core::rng::derive_seed;
use lpws_core::simulation::{
    cone_constant, generate_beta_placed, generate_design, generate_problem,
    restricted_eigenvalue_estimate, verify_error_bound, TheoryConstants,
};
use lpws_core::solver::fit_owlqn;
use lpws_core::tuning::{
    coverage_check, lambda_asymptotic, simulate_sup_score_gaussian, simulate_sup_score_oracle,
};
use lpws_core::{Coefficients, Error, FitResult, ModelProblem, ObjectiveKind, SolverConfig};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind, Method};
use crate::error::{CliError, Result};
use crate::records::{BoundRow, CoverageRow, ReplicationRecord};

/// Coefficient redraws allowed when a draw pushes some rate past the sampler bound.
const MAX_REDRAWS: u64 = 1000;

/// One synthetic data set.
#[derive(Debug, Clone)]
pub struct Replication {
    pub rep_index: usize,
    pub seed: u64,
    pub problem: ModelProblem,
    pub beta_star: Coefficients,
    /// Coefficient draws discarded because a rate exceeded the sampler bound.
    pub redraws: usize,
}

pub fn replication(cfg: &ExperimentConfig, scale: f64, rep_index: usize) -> Result<Replication> {
    let seed = derive_seed(cfg.seed, rep_index as u64);
    let x = generate_design(cfg.n, cfg.p, derive_seed(seed, 0))?;
    for attempt in 0..MAX_REDRAWS {
        let beta = generate_beta_placed(cfg.p, cfg.s, scale, derive_seed(seed, 1 + 2 * attempt), cfg.placement)?;
        match generate_problem(x.clone(), &beta, derive_seed(seed, 2 + 2 * attempt)) {
            Ok(problem) => {
                return Ok(Replication { rep_index, seed, problem, beta_star: beta, redraws: attempt as usize });
            }
            Err(Error::RateOverflow { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(CliError::Input(format!(
        "replication {rep_index}: every coefficient draw at scale {scale} overflows the Poisson sampler"
    )))
}

pub fn solver_config(cfg: &ExperimentConfig) -> SolverConfig {
    SolverConfig::default().with_max_iters(cfg.max_iters).with_tol_kkt(cfg.tol_kkt)
}

/// Outcome of one method on one replication.
#[derive(Debug, Clone)]
pub struct MethodFit {
    pub method: Method,
    pub lambda: f64,
    /// Last iterate, also on divergence. `None` if no fit was attempted.
    pub fit: Option<FitResult>,
    pub converged: bool,
    pub wall_time_s: f64,
}

/// The rule's lambda for `rep`. The quantile rules scale the simulated
/// `1 - alpha` quantile by `quantile_c` directly, so a multiplier of 1
/// (the bare quantile) is allowed here even though tuning specs need c > 1.
fn lpws_lambda(cfg: &ExperimentConfig, rep: &Replication, method: Method) -> Result<f64> {
    let seed = derive_seed(rep.seed, 100 + method.stream());
    let q = 1.0 - cfg.alpha;
    Ok(match method {
        Method::LpwsAsymptotic => lambda_asymptotic(cfg.n, cfg.p, cfg.alpha, cfg.tuning_c)?,
        Method::LpwsExactOracle => {
            let dist = simulate_sup_score_oracle(&rep.problem, &rep.beta_star, cfg.mc_samples, seed)?;
            cfg.quantile_c * dist.quantile(q)?
        }
        Method::LpwsGaussianApprox => {
            let dist = simulate_sup_score_gaussian(&rep.problem, cfg.mc_samples, seed)?;
            cfg.quantile_c * dist.quantile(q)?
        }
        Method::LoglikCv => return Err(CliError::Input("loglik_cv has no closed-form lambda".into())),
    })
}

/// Divergence and non-convergence are outcomes, not errors.
fn settle(result: lpws_core::Result<FitResult>) -> Result<(Option<FitResult>, bool)> {
    match result {
        Ok(fit) => {
            let ok = fit.converged;
            Ok((Some(fit), ok))
        }
        Err(Error::Divergence(partial)) => Ok((Some(*partial), false)),
        Err(e) => Err(e.into()),
    }
}

pub fn run_method(cfg: &ExperimentConfig, rep: &Replication, method: Method) -> Result<MethodFit> {
    let start = Instant::now();
    let solver = solver_config(cfg);
    let p = rep.problem.p();
    let (lambda, fit, converged) = match method {
        Method::LoglikCv => {
            let cv = CvConfig {
                folds: cfg.folds,
                lambda_grid: LambdaGrid::Auto { points: cfg.grid_points, min_ratio: cfg.grid_min_ratio },
                seed: derive_seed(rep.seed, 100 + method.stream()),
            };
            match cross_validate(&rep.problem, &cv, &solver) {
                Ok(out) => {
                    let (fit, ok) = settle(fit_poisson_lasso(&rep.problem, out.best_lambda, &solver))?;
                    (out.best_lambda, fit, ok)
                }
                Err(Error::AllLambdasFailed) => (f64::NAN, None, false),
                Err(e) => return Err(e.into()),
            }
        }
        _ => {
            let lambda = lpws_lambda(cfg, rep, method)?;
            let result = fit_owlqn(&rep.problem, ObjectiveKind::Weighted, lambda, &solver, &Coefficients::zeros(p));
            let (fit, ok) = settle(result)?;
            (lambda, fit, ok)
        }
    };
    let wall_time_s = if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 };
    Ok(MethodFit { method, lambda, fit, converged, wall_time_s })
}

pub fn record(rep: &Replication, scale: f64, out: &MethodFit) -> ReplicationRecord {
    let (l1, l2, recovered) = match &out.fit {
        Some(fit) if fit.beta_hat.is_finite() => {
            let d = fit.beta_hat.sub(&rep.beta_star);
            let recovered = rep.beta_star.support().iter().all(|&j| fit.beta_hat[j] != 0.0);
            (d.l1_norm(), d.l2_norm(), recovered)
        }
        _ => (f64::NAN, f64::NAN, false),
    };
    ReplicationRecord {
        rep_index: rep.rep_index,
        method: out.method,
        scale,
        converged: out.converged,
        l1_error: l1,
        l2_error: l2,
        support_recovered: out.converged && recovered,
        lambda_used: out.lambda,
        wall_time_s: out.wall_time_s,
    }
}

/// Runs `work` over `units` on `jobs` threads, handing results to `emit`
/// in unit order one chunk at a time. `emit` returns `false` to stop early.
fn drive<U: Sync, R: Send>(
    units: &[U],
    jobs: usize,
    work: impl Fn(&U) -> Result<R> + Sync,
    mut emit: impl FnMut(R) -> Result<bool>,
) -> Result<()> {
    let jobs = jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    for chunk in units.chunks(jobs * 2) {
        let results: Vec<Result<R>> = pool.install(|| chunk.par_iter().map(&work).collect());
        for r in results {
            if !emit(r?)? {
                return Ok(());
            }
        }
    }
    Ok(())
}

/// The outcome of a record-producing campaign.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<ReplicationRecord>,
    /// Coefficient draws discarded for overflowing rates, over all replications.
    pub redraws: usize,
}

/// Fits `cfg.methods` on `reps` replications at each scale. `on_rows` sees
/// the records of each finished replication in order.
pub fn run_records(
    cfg: &ExperimentConfig,
    jobs: usize,
    on_rows: &mut dyn FnMut(&[ReplicationRecord]) -> Result<()>,
) -> Result<ExperimentReport> {
    let units: Vec<(f64, usize)> =
        cfg.scales.iter().flat_map(|&s| (0..cfg.reps).map(move |r| (s, r))).collect();
    let mut report = ExperimentReport::default();
    drive(
        &units,
        jobs,
        |&(scale, r)| {
            let rep = replication(cfg, scale, r)?;
            let rows = cfg
                .methods
                .iter()
                .map(|&m| run_method(cfg, &rep, m).map(|out| record(&rep, scale, &out)))
                .collect::<Result<Vec<_>>>()?;
            Ok((rows, rep.redraws))
        },
        |(rows, redraws)| {
            on_rows(&rows)?;
            report.redraws += redraws;
            report.records.extend(rows);
            Ok(true)
        },
    )?;
    Ok(report)
}

fn require(cfg: &ExperimentConfig, kind: ExperimentKind, needed: &[Method]) -> Result<()> {
    if cfg.kind != kind {
        return Err(CliError::Input(format!("config is for {}, not {}", cfg.kind.name(), kind.name())));
    }
    for m in needed {
        if !cfg.methods.contains(m) {
            return Err(CliError::Input(format!("the {} experiment needs method {m}", kind.name())));
        }
    }
    Ok(())
}

/// Convergence of each method across coefficient scales.
pub fn run_robustness_experiment(
    cfg: &ExperimentConfig,
    jobs: usize,
    on_rows: &mut dyn FnMut(&[ReplicationRecord]) -> Result<()>,
) -> Result<ExperimentReport> {
    require(cfg, ExperimentKind::Robustness, &[Method::LpwsAsymptotic, Method::LoglikCv])?;
    run_records(cfg, jobs, on_rows)
}

/// l1 estimation error of the four tuning strategies.
pub fn run_error_experiment(
    cfg: &ExperimentConfig,
    jobs: usize,
    on_rows: &mut dyn FnMut(&[ReplicationRecord]) -> Result<()>,
) -> Result<ExperimentReport> {
    require(cfg, ExperimentKind::Errors, &Method::ALL)?;
    run_records(cfg, jobs, on_rows)
}

/// Per-coordinate estimates of both estimators on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTable {
    pub beta_star: Vec<f64>,
    pub lpws: Vec<f64>,
    pub loglik: Vec<f64>,
    pub records: Vec<ReplicationRecord>,
}

impl SolutionTable {
    pub fn csv(&self) -> String {
        let mut s = String::from("j,beta_star,beta_lpws,beta_loglik\n");
        for j in 0..self.beta_star.len() {
            s.push_str(&format!("{},{},{},{}\n", j + 1, self.beta_star[j], self.lpws[j], self.loglik[j]));
        }
        s
    }
}

pub fn run_solution_comparison(cfg: &ExperimentConfig) -> Result<SolutionTable> {
    if cfg.kind != ExperimentKind::Solutions {
        return Err(CliError::Input(format!("config is for {}, not solutions", cfg.kind.name())));
    }
    let scale = cfg.scales[0];
    let rep = replication(cfg, scale, 0)?;
    let estimate = |out: &MethodFit| match &out.fit {
        Some(f) => f.beta_hat.as_slice().to_vec(),
        None => vec![f64::NAN; cfg.p],
    };
    let a = run_method(cfg, &rep, Method::LpwsAsymptotic)?;
    let b = run_method(cfg, &rep, Method::LoglikCv)?;
    Ok(SolutionTable {
        beta_star: rep.beta_star.as_slice().to_vec(),
        lpws: estimate(&a),
        loglik: estimate(&b),
        records: vec![record(&rep, scale, &a), record(&rep, scale, &b)],
    })
}

/// Monte Carlo coverage `P(lambda >= c H)` of each tuning rule, with
/// responses redrawn from streams unrelated to those that set lambda.
pub fn run_coverage_experiment(
    cfg: &ExperimentConfig,
    jobs: usize,
    on_rows: &mut dyn FnMut(&[CoverageRow]) -> Result<()>,
) -> Result<Vec<CoverageRow>> {
    if cfg.kind != ExperimentKind::Coverage {
        return Err(CliError::Input(format!("config is for {}, not coverage", cfg.kind.name())));
    }
    if cfg.methods.contains(&Method::LoglikCv) {
        return Err(CliError::Input("coverage is defined for the lpws tuning rules only".into()));
    }
    let units: Vec<usize> = (0..cfg.reps).collect();
    let mut all = Vec::new();
    drive(
        &units,
        jobs,
        |&r| {
            let rep = replication(cfg, cfg.scales[0], r)?;
            cfg.methods
                .iter()
                .map(|&m| {
                    let lambda = lpws_lambda(cfg, &rep, m)?;
                    let seed = derive_seed(rep.seed, 200 + m.stream());
                    let coverage =
                        coverage_check(&rep.problem, &rep.beta_star, lambda, cfg.tuning_c, cfg.coverage_trials, seed)?;
                    Ok(CoverageRow { rep_index: r, method: m, lambda, coverage, trials: cfg.coverage_trials })
                })
                .collect::<Result<Vec<_>>>()
        },
        |rows| {
            on_rows(&rows)?;
            all.extend(rows);
            Ok(true)
        },
    )?;
    Ok(all)
}

/// Checks the deterministic error bound replication by replication until
/// `cfg.reps` replications satisfy `lambda > c H` or `cfg.max_reps` are used.
pub fn run_bound_experiment(
    cfg: &ExperimentConfig,
    jobs: usize,
    on_rows: &mut dyn FnMut(&[BoundRow]) -> Result<()>,
) -> Result<Vec<BoundRow>> {
    if cfg.kind != ExperimentKind::Bound {
        return Err(CliError::Input(format!("config is for {}, not bound", cfg.kind.name())));
    }
    if cfg.s == 0 {
        return Err(CliError::Input("the bound experiment needs s >= 1".into()));
    }
    let method = match cfg.methods.as_slice() {
        [m] if *m != Method::LoglikCv => *m,
        _ => return Err(CliError::Input("the bound experiment takes one lpws method".into())),
    };
    let l = cone_constant(cfg.tuning_c)?;
    let units: Vec<usize> = (0..cfg.max_reps).collect();
    let mut rows = Vec::new();
    let mut covered = 0;
    drive(
        &units,
        jobs,
        |&r| {
            let rep = replication(cfg, cfg.scales[0], r)?;
            let lambda = lpws_lambda(cfg, &rep, method)?;
            let p = rep.problem.p();
            let (fit, converged) = settle(fit_owlqn(
                &rep.problem,
                ObjectiveKind::Weighted,
                lambda,
                &solver_config(cfg),
                &Coefficients::zeros(p),
            ))?;
            let fit = fit.expect("weighted fits always return an iterate");
            let kappa = restricted_eigenvalue_estimate(
                &rep.problem,
                &rep.beta_star,
                l,
                cfg.kappa_samples,
                derive_seed(rep.seed, 300),
            )?;
            let consts = TheoryConstants::new(kappa, cfg.tuning_c, &rep.problem)?;
            let b = verify_error_bound(&rep.problem, &rep.beta_star, &fit, lambda, &consts)?;
            Ok(BoundRow {
                rep_index: r,
                lambda,
                sup_score: b.sup_score,
                kappa,
                covered: b.covered(),
                smallness_condition: b.smallness_condition,
                converged,
                l1_error: b.l1_error,
                l1_bound: b.l1_bound,
                objective_gap: b.objective_gap,
                objective_bound: b.objective_bound,
                cone_off_support: b.cone_off_support,
                cone_on_support: b.cone_on_support,
                cone_holds: b.cone_holds(),
                l1_holds: b.l1_holds(),
                objective_holds: b.objective_holds(),
            })
        },
        |row| {
            covered += usize::from(row.covered);
            on_rows(std::slice::from_ref(&row))?;
            rows.push(row);
            Ok(covered < cfg.reps)
        },
    )?;
    Ok(rows)
}
