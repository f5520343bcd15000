use lpws::config::{ExperimentConfig, ExperimentKind, Method};
use lpws::experiment::{
    replication, run_bound_experiment, run_coverage_experiment, run_method, run_records, run_solution_comparison,
    solver_config,
};
use lpws::lpws_core::solver::fit_owlqn;
use lpws::lpws_core::{Coefficients, ObjectiveKind};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults(kind);
    cfg.n = 120;
    cfg.p = 10;
    cfg.s = 3;
    cfg.mc_samples = 500;
    cfg.grid_points = 15;
    cfg.folds = 5;
    cfg
}

#[test]
fn design_is_shared_across_scales() {
    let cfg = small(ExperimentKind::Robustness);
    let a = replication(&cfg, 0.5, 2).unwrap();
    let b = replication(&cfg, 3.0, 2).unwrap();
    assert_eq!(a.problem.x(), b.problem.x());
    assert_eq!(a.seed, b.seed);
    let c = replication(&cfg, 0.5, 3).unwrap();
    assert_ne!(a.problem.x(), c.problem.x());
}

#[test]
fn zero_truth_converges_for_every_method() {
    let mut cfg = small(ExperimentKind::Errors);
    cfg.scales = vec![0.0];
    cfg.reps = 3;
    let report = run_records(&cfg, 2, &mut |_| Ok(())).unwrap();
    assert_eq!(report.records.len(), 3 * Method::ALL.len());
    for r in &report.records {
        assert!(r.converged, "{} rep {}", r.method, r.rep_index);
        assert!(r.l1_error.is_finite());
        assert!(r.support_recovered, "empty support is always contained");
    }
    let lpws: Vec<_> = report.records.iter().filter(|r| r.method == Method::LpwsAsymptotic).collect();
    assert!(lpws.iter().all(|r| r.l1_error < 0.5));
}

#[test]
fn records_arrive_in_rep_order_for_any_job_count() {
    let mut cfg = small(ExperimentKind::Robustness);
    cfg.scales = vec![0.5, 1.0];
    cfg.reps = 4;
    let mut seen = Vec::new();
    let one = run_records(&cfg, 1, &mut |rows| {
        seen.extend(rows.iter().map(|r| (r.scale, r.rep_index)));
        Ok(())
    })
    .unwrap();
    let many = run_records(&cfg, 4, &mut |_| Ok(())).unwrap();
    assert_eq!(one.records, many.records);
    let mut sorted = seen.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(seen, sorted);
}

#[test]
fn penalized_solution_is_shrunk_relative_to_unpenalized_fit() {
    let mut cfg = small(ExperimentKind::Solutions);
    cfg.scales = vec![0.5];
    let table = run_solution_comparison(&cfg).unwrap();
    assert_eq!(table.beta_star.len(), cfg.p);
    assert_eq!(table.lpws.len(), cfg.p);
    assert_eq!(table.loglik.len(), cfg.p);
    assert_eq!(table.csv().lines().count(), cfg.p + 1);

    let rep = replication(&cfg, 0.5, 0).unwrap();
    let free = fit_owlqn(
        &rep.problem,
        ObjectiveKind::Weighted,
        0.0,
        &solver_config(&cfg).with_max_iters(5000),
        &Coefficients::zeros(cfg.p),
    )
    .unwrap();
    assert!(free.converged);
    let l1 = |v: &[f64]| v.iter().map(|b| b.abs()).sum::<f64>();
    assert!(l1(&table.lpws) <= l1(free.beta_hat.as_slice()) + 1e-9);
    assert!(table.lpws.iter().filter(|b| **b == 0.0).count() > 0);
}

#[test]
fn exact_oracle_needs_no_extra_input() {
    let cfg = small(ExperimentKind::Errors);
    let rep = replication(&cfg, 0.5, 0).unwrap();
    let exact = run_method(&cfg, &rep, Method::LpwsExactOracle).unwrap();
    let gauss = run_method(&cfg, &rep, Method::LpwsGaussianApprox).unwrap();
    assert!(exact.lambda > 0.0 && gauss.lambda > 0.0);
    assert!(exact.converged && gauss.converged);
}

#[test]
fn coverage_rows_per_rep_and_method() {
    let mut cfg = small(ExperimentKind::Coverage);
    cfg.reps = 2;
    cfg.coverage_trials = 200;
    let rows = run_coverage_experiment(&cfg, 2, &mut |_| Ok(())).unwrap();
    assert_eq!(rows.len(), 2 * cfg.methods.len());
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.coverage)));
}

#[test]
fn coverage_refuses_cross_validation() {
    let mut cfg = small(ExperimentKind::Coverage);
    cfg.methods = vec![Method::LoglikCv];
    assert!(run_coverage_experiment(&cfg, 1, &mut |_| Ok(())).is_err());
}

#[test]
fn bound_experiment_stops_at_requested_cover() {
    let mut cfg = small(ExperimentKind::Bound);
    cfg.n = 300;
    cfg.reps = 3;
    cfg.kappa_samples = 1000;
    cfg.max_reps = 40;
    let rows = run_bound_experiment(&cfg, 2, &mut |_| Ok(())).unwrap();
    let covered: Vec<_> = rows.iter().filter(|r| r.covered).collect();
    assert_eq!(covered.len(), 3);
    assert!(rows.last().unwrap().covered);
    assert!(covered.iter().all(|r| r.all_hold()));
}

#[test]
fn wrong_kind_is_rejected() {
    let cfg = small(ExperimentKind::Coverage);
    assert!(run_solution_comparison(&cfg).is_err());
    assert!(run_bound_experiment(&cfg, 1, &mut |_| Ok(())).is_err());
}
