//! OWL-QN against the ISTA cross-check and scalar root-finding oracles.

use lpws_core::objective::{objective, smooth_gradient};
use lpws_core::simulation::{generate_beta, generate_design, generate_problem};
use lpws_core::solver::{fit_owlqn, fit_proximal, kkt_residual, kkt_residual_weighted};
use lpws_core::tuning::lambda_asymptotic;
use lpws_core::{Coefficients, Design, Error, ModelProblem, ObjectiveKind, SolverConfig};

fn instance(n: usize, p: usize, s: usize, scale: f64, seed: u64) -> (ModelProblem, Coefficients) {
    let x = generate_design(n, p, seed).unwrap();
    let beta = generate_beta(p, s, scale, seed + 1).unwrap();
    (generate_problem(x, &beta, seed + 2).unwrap(), beta)
}

fn max_abs_diff(a: &Coefficients, b: &Coefficients) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn prox_config() -> SolverConfig {
    SolverConfig::default().with_max_iters(200_000).with_tol_kkt(1e-9)
}

fn seeded_config() -> SolverConfig {
    SolverConfig::default().with_tol_kkt(1e-9)
}

#[test]
fn large_lambda_returns_origin() {
    let (prob, _) = instance(60, 8, 3, 1.0, 1);
    for kind in [ObjectiveKind::Weighted, ObjectiveKind::LogLik] {
        let g0 = smooth_gradient(&prob, kind, &Coefficients::zeros(8)).unwrap();
        let lmax = g0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let init = Coefficients::zeros(8);
        let a = fit_owlqn(&prob, kind, 1.01 * lmax, &SolverConfig::default(), &init).unwrap();
        assert!(a.converged);
        assert_eq!(a.beta_hat, init);
        let b = fit_proximal(&prob, kind, 1.01 * lmax, &SolverConfig::default(), &init).unwrap();
        assert!(b.converged && b.iterations <= 1);
        assert_eq!(b.beta_hat, init);
        assert_eq!(kkt_residual(&prob, kind, &init, lmax).unwrap(), 0.0);
        let r0 = kkt_residual(&prob, kind, &init, 0.0).unwrap();
        assert!((r0 - lmax).abs() < 1e-15);
    }
}

#[test]
fn owlqn_and_ista_agree_weighted_small() {
    let (prob, _) = instance(50, 5, 3, 0.5, 10);
    let init = Coefficients::zeros(5);
    let a = fit_owlqn(&prob, ObjectiveKind::Weighted, 0.05, &seeded_config(), &init).unwrap();
    let b = fit_proximal(&prob, ObjectiveKind::Weighted, 0.05, &prox_config(), &init).unwrap();
    assert!(a.converged && b.converged, "{} {}", a.kkt_residual, b.kkt_residual);
    assert!(max_abs_diff(&a.beta_hat, &b.beta_hat) < 1e-5);
}

/// The intercept-only weighted problem has score root `beta = ln(mean y)`;
/// recover it by bisection on the scalar gradient.
#[test]
fn scalar_problem_matches_bisection() {
    let n = 25;
    let x = Design::from_row_major(n, 1, vec![1.0; n]).unwrap();
    let y: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64).collect();
    let prob = ModelProblem::new(x, y).unwrap();
    let grad = |b: f64| smooth_gradient(&prob, ObjectiveKind::Weighted, &Coefficients::new(vec![b])).unwrap()[0];
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if grad(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let fit = fit_owlqn(&prob, ObjectiveKind::Weighted, 0.0, &SolverConfig::default().with_tol_kkt(1e-12), &Coefficients::zeros(1)).unwrap();
    assert!(fit.converged);
    assert!((fit.beta_hat[0] - root).abs() < 1e-8, "{} vs {root}", fit.beta_hat[0]);
}

#[test]
fn ista_unpenalized_loglik_reaches_stationarity() {
    // Responses close to an exact exponential fit.
    let (n, p) = (40, 3);
    let x = generate_design(n, p, 3).unwrap();
    let truth = [0.4, -0.3, 0.2];
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let eta: f64 = x.row(i).iter().zip(&truth).map(|(a, b)| a * b).sum();
            (10.0 * eta.exp()).round()
        })
        .collect();
    let prob = ModelProblem::new(x, y).unwrap();
    let fit = fit_proximal(&prob, ObjectiveKind::LogLik, 0.0, &SolverConfig::default().with_max_iters(200_000), &Coefficients::zeros(p)).unwrap();
    assert!(fit.converged);
    let g = smooth_gradient(&prob, ObjectiveKind::LogLik, &fit.beta_hat).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-7));
}

#[test]
fn cross_solver_agreement_on_20_instances() {
    for seed in 0..20u64 {
        let (prob, _) = instance(100, 20, 5, 0.5, 1000 + 10 * seed);
        let lambda = lambda_asymptotic(100, 20, 0.05, 2.0).unwrap();
        let init = Coefficients::zeros(20);
        for kind in [ObjectiveKind::Weighted, ObjectiveKind::LogLik] {
            let lam = if kind == ObjectiveKind::LogLik { 0.5 * lambda } else { lambda };
            let a = fit_owlqn(&prob, kind, lam, &seeded_config(), &init).unwrap();
            let b = fit_proximal(&prob, kind, lam, &prox_config(), &init).unwrap();
            assert!(a.converged && b.converged, "seed {seed} {kind:?}");
            let d = max_abs_diff(&a.beta_hat, &b.beta_hat);
            assert!(d < 1e-5, "seed {seed} {kind:?}: {d}");
            for fit in [&a, &b] {
                let r = kkt_residual(&prob, kind, &fit.beta_hat, lam).unwrap();
                assert!(r <= 1e-9 * 1.0001);
            }
        }
    }
}

#[test]
fn traces_are_monotone_and_objective_never_rises() {
    for seed in 0..10u64 {
        let (prob, _) = instance(80, 12, 4, 0.8, 50 + seed);
        let init = Coefficients::new(vec![0.05; 12]);
        for kind in [ObjectiveKind::Weighted, ObjectiveKind::LogLik] {
            let start = objective(&prob, kind, &init, 0.05).unwrap().total;
            for fit in [
                fit_owlqn(&prob, kind, 0.05, &SolverConfig::default(), &init).unwrap(),
                fit_proximal(&prob, kind, 0.05, &SolverConfig::default(), &init).unwrap(),
            ] {
                assert!(fit.trace.windows(2).all(|w| w[1].1 <= w[0].1));
                assert!(fit.objective.total <= start + 1e-12);
                if fit.converged {
                    assert!(fit.kkt_residual <= 1e-7);
                }
            }
        }
    }
}

#[test]
fn fits_are_deterministic() {
    let (prob, _) = instance(70, 10, 3, 1.0, 4);
    let init = Coefficients::zeros(10);
    let a = fit_owlqn(&prob, ObjectiveKind::Weighted, 0.03, &SolverConfig::default(), &init).unwrap();
    let b = fit_owlqn(&prob, ObjectiveKind::Weighted, 0.03, &SolverConfig::default(), &init).unwrap();
    assert_eq!(a, b);
    let bits = |f: &lpws_core::FitResult| f.trace.iter().map(|t| t.1.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn unpenalized_intercept_via_weights() {
    // Column 0 is an explicit intercept; only the others are penalized.
    let (n, p) = (120, 4);
    let z = generate_design(n, p - 1, 8).unwrap();
    let mut data = Vec::with_capacity(n * p);
    for i in 0..n {
        data.push(1.0);
        data.extend_from_slice(z.row(i));
    }
    let x = Design::from_row_major(n, p, data).unwrap();
    let truth = Coefficients::new(vec![1.5, 0.4, 0.0, 0.0]);
    let prob = generate_problem(x, &truth, 3).unwrap();
    let config = SolverConfig::default().with_penalty_weights(vec![0.0, 1.0, 1.0, 1.0]);
    let fit = fit_owlqn(&prob, ObjectiveKind::Weighted, 10.0, &config, &Coefficients::zeros(p)).unwrap();
    assert!(fit.converged);
    assert!(fit.beta_hat[0] > 1.0);
    assert!(fit.beta_hat.as_slice()[1..].iter().all(|&b| b == 0.0));
    let r = kkt_residual_weighted(&prob, ObjectiveKind::Weighted, &fit.beta_hat, 10.0, Some(&[0.0, 1.0, 1.0, 1.0])).unwrap();
    assert!(r <= 1e-7);
}

#[test]
fn orthant_steps_never_cross_zero() {
    // Start away from zero with a penalty that forces coordinates to zero.
    let (prob, _) = instance(60, 6, 2, 0.5, 21);
    let init = Coefficients::new(vec![0.4, -0.4, 0.4, -0.4, 0.4, -0.4]);
    let config = SolverConfig::default().with_max_iters(1);
    for iters in 1..40 {
        let fit = fit_owlqn(&prob, ObjectiveKind::Weighted, 0.1, &config.clone().with_max_iters(iters), &init).unwrap();
        let prev = if iters == 1 {
            init.clone()
        } else {
            fit_owlqn(&prob, ObjectiveKind::Weighted, 0.1, &config.clone().with_max_iters(iters - 1), &init).unwrap().beta_hat
        };
        for (a, b) in prev.as_slice().iter().zip(fit.beta_hat.as_slice()) {
            assert!(a * b >= 0.0, "sign flip {a} -> {b} at iteration {iters}");
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    let (prob, _) = instance(30, 4, 2, 0.5, 2);
    let init = Coefficients::zeros(4);
    let c = SolverConfig::default();
    assert!(matches!(fit_owlqn(&prob, ObjectiveKind::Weighted, -1.0, &c, &init), Err(Error::Domain(_))));
    assert!(fit_owlqn(&prob, ObjectiveKind::Weighted, 0.1, &c, &Coefficients::zeros(3)).is_err());
    assert!(fit_proximal(&prob, ObjectiveKind::Weighted, 0.1, &c, &Coefficients::new(vec![f64::NAN; 4])).is_err());
}
