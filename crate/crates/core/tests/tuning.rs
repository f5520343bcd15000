use lpws_core::rng::stream_rng;
use lpws_core::simulation::{generate_beta, generate_design, generate_problem, poisson_rates};
use lpws_core::tuning::{
    coverage_check, lambda_asymptotic, normal_cdf, normal_quantile, select_lambda,
    simulate_sup_score_gaussian, simulate_sup_score_oracle, TuningRule, TuningSpec,
};
use lpws_core::{Coefficients, Design, Error, ModelProblem};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

fn easy_problem(seed: u64) -> (ModelProblem, Coefficients) {
    let x = generate_design(200, 50, seed).unwrap();
    let beta = generate_beta(50, 3, 0.5, seed + 1).unwrap();
    (generate_problem(x, &beta, seed + 2).unwrap(), beta)
}

#[test]
fn quantile_matches_high_precision_values() {
    // Reference values computed with 30-digit arithmetic at the exact
    // double nearest each q (this matters in the far upper tail).
    let cases = [
        (0.99875, 3.023_341_439_739_147_4),
        (0.95, 1.644_853_626_951_472_7),
        (0.999_999, 4.753_424_308_817_088),
        (1e-10, -6.361_340_902_404_056),
    ];
    for (q, z) in cases {
        let got = normal_quantile(q).unwrap();
        assert!((got - z).abs() <= 1e-12 * z.abs(), "q={q}: {got} vs {z}");
    }
    assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-15);
}

#[test]
fn asymptotic_reference_value() {
    let l = lambda_asymptotic(500, 20, 0.05, 2.0).unwrap();
    assert!((l - 0.135_207_939_568_976_3).abs() < 1e-14);
}

#[test]
fn asymptotic_monotone_in_p_and_alpha() {
    let mut prev = 0.0;
    for p in [2, 5, 20, 100, 1000, 10_000] {
        let l = lambda_asymptotic(100, p, 0.05, 2.0).unwrap();
        assert!(l > prev);
        prev = l;
    }
    let mut prev = f64::INFINITY;
    for alpha in [0.001, 0.01, 0.05, 0.1, 0.5] {
        let l = lambda_asymptotic(100, 20, alpha, 2.0).unwrap();
        assert!(l < prev);
        prev = l;
    }
}

#[test]
fn asymptotic_order_band() {
    // The ratio is roughly c/2 times a slowly varying factor near 1.2 to 1.3,
    // so the band [0.3, 1.2] is checked at multipliers that fit inside it.
    for c in [1.1, 1.5] {
        for n in [100, 500, 1000] {
            for p in [20, 100, 1000] {
                let alpha: f64 = 0.05;
                let ratio = lambda_asymptotic(n, p, alpha, c).unwrap()
                    / ((p as f64 / alpha).ln() / n as f64).sqrt();
                assert!((0.3..=1.2).contains(&ratio), "c={c} n={n} p={p}: {ratio}");
            }
        }
    }
}

proptest! {
    #[test]
    fn asymptotic_scales_as_c_over_root_n(n in 1usize..5000, p in 1usize..5000, c in 1.01f64..10.0) {
        let base = lambda_asymptotic(1, p, 0.05, 2.0).unwrap();
        let l = lambda_asymptotic(n, p, 0.05, c).unwrap();
        prop_assert!((l - base * c / 2.0 / (n as f64).sqrt()).abs() <= 1e-13 * l);
    }

    #[test]
    fn quantile_inverts_cdf(q in 1e-12f64..(1.0 - 1e-12)) {
        let z = normal_quantile(q).unwrap();
        let back = normal_cdf(z);
        let tail = q.min(1.0 - q);
        prop_assert!((back - q).abs() <= 1e-12 * tail.max(1e-300) + 1e-16);
    }
}

/// With one observation on a unit column the Gaussian surrogate is `|z| / 2`,
/// whose 0.95 quantile is `1.959964 / 2`.
#[test]
fn gaussian_surrogate_is_half_normal_for_scalar_design() {
    let prob = ModelProblem::new(Design::from_row_major(1, 1, vec![1.0]).unwrap(), vec![1.0]).unwrap();
    let dist = simulate_sup_score_gaussian(&prob, 100_000, 3).unwrap();
    let q = dist.quantile(0.95).unwrap();
    assert!((q / 0.979_981_992_270_027 - 1.0).abs() < 0.02, "{q}");
}

#[test]
fn oracle_median_matches_independent_resimulation() {
    let (prob, beta) = easy_problem(40);
    let dist = simulate_sup_score_oracle(&prob, &beta, 20_000, 5).unwrap();
    let median = dist.quantile(0.5).unwrap();

    let rates = poisson_rates(prob.x(), &beta).unwrap();
    let mut rng = stream_rng(123_456, 0);
    let mut draws: Vec<f64> = (0..20_000)
        .map(|_| {
            let resid: Vec<f64> = rates
                .iter()
                .map(|&mu| (Poisson::new(mu).unwrap().sample(&mut rng) - mu) / mu.sqrt())
                .collect();
            (0..prob.p())
                .map(|j| {
                    let s: f64 = (0..prob.n()).map(|i| prob.x().get(i, j) * resid[i]).sum();
                    (s / (2.0 * prob.n() as f64)).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    let other = draws[draws.len() / 2];
    assert!((median / other - 1.0).abs() < 0.02, "{median} vs {other}");
}

#[test]
fn oracle_and_gaussian_agree_at_large_rates() {
    // Intercept column pins every rate near 20.
    let (n, p) = (200, 10);
    let z = generate_design(n, p - 1, 71).unwrap();
    let mut data = Vec::with_capacity(n * p);
    for i in 0..n {
        data.push(1.0);
        data.extend_from_slice(z.row(i));
    }
    let x = Design::from_row_major(n, p, data).unwrap();
    let mut beta = vec![0.0; p];
    beta[0] = 20f64.ln();
    beta[1] = 0.1;
    beta[2] = -0.1;
    let beta = Coefficients::new(beta);
    let rates = poisson_rates(&x, &beta).unwrap();
    assert!(rates.iter().all(|&m| m >= 5.0));
    let prob = generate_problem(x, &beta, 72).unwrap();
    let oracle = simulate_sup_score_oracle(&prob, &beta, 100_000, 1).unwrap();
    let gauss = simulate_sup_score_gaussian(&prob, 100_000, 2).unwrap();
    let (a, b) = (oracle.quantile(0.95).unwrap(), gauss.quantile(0.95).unwrap());
    assert!((a / b - 1.0).abs() < 0.10, "{a} vs {b}");
}

#[test]
fn select_lambda_rules() {
    let (prob, beta) = easy_problem(9);
    let spec = TuningSpec::new(TuningRule::GaussianApprox, 0.05, 2.0).with_mc_samples(2000).with_seed(4);
    let a = select_lambda(&spec, &prob, None).unwrap();
    assert_eq!(a.to_bits(), select_lambda(&spec, &prob, None).unwrap().to_bits());
    let doubled = TuningSpec { c: 4.0, ..spec };
    assert_eq!(select_lambda(&doubled, &prob, None).unwrap(), 2.0 * a);

    let exact = TuningSpec::new(TuningRule::ExactOracle, 0.05, 2.0).with_mc_samples(2000);
    assert!(matches!(select_lambda(&exact, &prob, None), Err(Error::MissingOracle)));
    assert!(select_lambda(&exact, &prob, Some(&beta)).unwrap() > 0.0);

    // Near alpha = 1 the quantile is the smallest draw.
    let edge = TuningSpec::new(TuningRule::ExactOracle, 1.0 - 1e-9, 2.0).with_mc_samples(500).with_seed(8);
    let dist = simulate_sup_score_oracle(&prob, &beta, 500, 8).unwrap();
    assert_eq!(select_lambda(&edge, &prob, Some(&beta)).unwrap(), 2.0 * dist.samples()[0]);

    let asym = TuningSpec::new(TuningRule::Asymptotic, 0.05, 2.0);
    assert_eq!(select_lambda(&asym, &prob, None).unwrap(), lambda_asymptotic(200, 50, 0.05, 2.0).unwrap());
}

#[test]
fn coverage_limits_and_oracle_guarantee() {
    let (prob, beta) = easy_problem(17);
    assert_eq!(coverage_check(&prob, &beta, 1e6, 2.0, 200, 1).unwrap(), 1.0);
    assert_eq!(coverage_check(&prob, &beta, 0.0, 2.0, 200, 1).unwrap(), 0.0);
    assert!(coverage_check(&prob, &beta, 1.0, 2.0, 99, 1).is_err());

    let spec = TuningSpec::new(TuningRule::ExactOracle, 0.1, 2.0).with_seed(11);
    let lambda = select_lambda(&spec, &prob, Some(&beta)).unwrap();
    let trials = 2000;
    let cov = coverage_check(&prob, &beta, lambda, 2.0, trials, 999).unwrap();
    assert!(cov >= 0.9 - 3.0 * (0.09 / trials as f64).sqrt(), "{cov}");
}

#[test]
fn gaussian_draws_are_seed_streams() {
    let (prob, _) = easy_problem(3);
    let a = simulate_sup_score_gaussian(&prob, 300, 7).unwrap();
    let mut rng = stream_rng(7, 0);
    let z: Vec<f64> = (0..prob.n()).map(|_| rng.sample(StandardNormal)).collect();
    let manual = (0..prob.p())
        .map(|j| {
            let s: f64 = (0..prob.n()).map(|i| prob.x().get(i, j) * z[i]).sum();
            (s / (2.0 * prob.n() as f64)).abs()
        })
        .fold(0.0, f64::max);
    assert!(a.samples().contains(&manual));
}
