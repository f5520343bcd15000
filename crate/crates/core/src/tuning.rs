//! Penalty-level selection.
//!
//! Three rules pick `lambda` so that `lambda >= c H` with probability about
//! `1 - alpha`, where `H = |grad f(beta*)|_inf` is the sup-norm of the weighted
//! score at the truth:
//!
//! * exact oracle: `c` times the `1 - alpha` quantile of `H | X`, simulated
//!   with the true coefficients;
//! * Gaussian approximation: the same with the standardized Poisson residuals
//!   replaced by standard normals;
//! * asymptotic: `(c / 2) n^{-1/2} Phi^{-1}(1 - alpha / (2p))`.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math;
use crate::problem::{Coefficients, ModelProblem};
use crate::rng::stream_rng;
use crate::simulation::{poisson_rates, sample_poisson};

/// Standard normal distribution function, via `erfc`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * math::erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse standard normal distribution function.
///
/// Acklam's rational approximation (relative error about 1e-9) followed by
/// one Halley step against [`normal_cdf`]. Upper-half arguments are mapped
/// to the lower tail so the correction works on an accurate tail probability.
pub fn normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {q}")));
    }
    if q == 0.5 {
        return Ok(0.0);
    }
    if q > 0.5 {
        return Ok(-lower_quantile(1.0 - q));
    }
    Ok(lower_quantile(q))
}

#[allow(clippy::excessive_precision)]
fn lower_quantile(q: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const Q_LOW: f64 = 0.02425;

    let x = if q < Q_LOW {
        let r = math::sqrt(-2.0 * math::ln(q));
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    } else {
        let u = q - 0.5;
        let r = u * u;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * u
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    let e = normal_cdf(x) - q;
    let u = e * math::sqrt(2.0 * core::f64::consts::PI) * math::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

fn check_alpha_c(alpha: f64, c: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(c > 1.0 && c.is_finite()) {
        return Err(Error::Domain(format!("c must exceed 1, got {c}")));
    }
    Ok(())
}

/// `(c / 2) n^{-1/2} Phi^{-1}(1 - alpha / (2p))`.
pub fn lambda_asymptotic(n: usize, p: usize, alpha: f64, c: f64) -> Result<f64> {
    if n == 0 || p == 0 {
        return Err(Error::Domain(format!("n and p must be positive, got n={n}, p={p}")));
    }
    check_alpha_c(alpha, c)?;
    let z = normal_quantile(1.0 - alpha / (2.0 * p as f64))?;
    Ok(0.5 * c * z / math::sqrt(n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    Oracle,
    Gaussian,
}

/// Sorted Monte Carlo draws of the sup-score `H` (or its Gaussian surrogate).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSupDist {
    samples: Vec<f64>,
    kind: ScoreKind,
}

impl ScoreSupDist {
    fn from_unsorted(mut samples: Vec<f64>, kind: ScoreKind) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { samples, kind }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        empirical_quantile(&self.samples, q)
    }
}

/// Upper order statistic: the `ceil(q m)`-th smallest of `m` sorted samples.
pub fn empirical_quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("empirical quantile of an empty sample".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {q}")));
    }
    let m = samples.len() as f64;
    let r = q * m;
    // Products such as 0.9 * 10000 land a hair above the integer.
    let rank = if (r - math::round(r)).abs() <= 1e-9 * m { math::round(r) } else { math::ceil(r) };
    let idx = (rank as usize).clamp(1, samples.len()) - 1;
    Ok(samples[idx])
}

/// `|(1/2n) X^T e|_inf` for a residual vector `e`.
fn sup_score(problem: &ModelProblem, residuals: &[f64]) -> f64 {
    let scale = 0.5 / problem.n() as f64;
    math::norm_inf(&problem.x().tmul_vec(residuals)) * scale
}

/// Standardized residual generator for repeated resampling of `y | X` at the truth.
struct OracleResampler {
    rates: Vec<f64>,
    roots: Vec<f64>,
}

impl OracleResampler {
    fn new(problem: &ModelProblem, beta_star: &Coefficients) -> Result<Self> {
        problem.check_len(beta_star.as_slice())?;
        let rates = poisson_rates(problem.x(), beta_star)?;
        let roots = rates.iter().map(|&m| math::sqrt(m)).collect();
        Ok(Self { rates, roots })
    }

    fn draw(&self, problem: &ModelProblem, seed: u64, index: u64, buf: &mut [f64]) -> Result<f64> {
        let mut rng = stream_rng(seed, index);
        for ((e, &mu), &root) in buf.iter_mut().zip(&self.rates).zip(&self.roots) {
            let y = sample_poisson(mu, &mut rng)? as f64;
            *e = (y - mu) / root;
        }
        Ok(sup_score(problem, buf))
    }
}

/// Draws of `H` obtained by resampling `y_i ~ Poisson(exp(x_i^T beta*))` with `X` fixed.
pub fn simulate_sup_score_oracle(
    problem: &ModelProblem,
    beta_star: &Coefficients,
    mc_samples: usize,
    seed: u64,
) -> Result<ScoreSupDist> {
    if mc_samples == 0 {
        return Err(Error::Domain("mc_samples must be positive".into()));
    }
    let sampler = OracleResampler::new(problem, beta_star)?;
    let mut buf = alloc::vec![0.0; problem.n()];
    let samples = (0..mc_samples as u64)
        .map(|k| sampler.draw(problem, seed, k, &mut buf))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreSupDist::from_unsorted(samples, ScoreKind::Oracle))
}

/// Draws of `H~ = |(1/2n) sum_i x_i z_i|_inf` with `z_i` i.i.d. standard normal.
pub fn simulate_sup_score_gaussian(
    problem: &ModelProblem,
    mc_samples: usize,
    seed: u64,
) -> Result<ScoreSupDist> {
    if mc_samples == 0 {
        return Err(Error::Domain("mc_samples must be positive".into()));
    }
    let mut buf = alloc::vec![0.0; problem.n()];
    let samples = (0..mc_samples as u64)
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            for z in buf.iter_mut() {
                *z = rng.sample(StandardNormal);
            }
            sup_score(problem, &buf)
        })
        .collect();
    Ok(ScoreSupDist::from_unsorted(samples, ScoreKind::Gaussian))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuningRule {
    ExactOracle,
    GaussianApprox,
    Asymptotic,
}

impl TuningRule {
    pub fn name(self) -> &'static str {
        match self {
            TuningRule::ExactOracle => "exact_oracle",
            TuningRule::GaussianApprox => "gaussian_approx",
            TuningRule::Asymptotic => "asymptotic",
        }
    }
}

impl core::str::FromStr for TuningRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_oracle" | "exact" => Ok(TuningRule::ExactOracle),
            "gaussian_approx" | "gaussian" => Ok(TuningRule::GaussianApprox),
            "asymptotic" => Ok(TuningRule::Asymptotic),
            other => Err(Error::Domain(format!("unknown tuning rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningSpec {
    pub rule: TuningRule,
    pub alpha: f64,
    pub c: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl TuningSpec {
    pub fn new(rule: TuningRule, alpha: f64, c: f64) -> Self {
        Self {
            rule,
            alpha,
            c,
            mc_samples: 10_000,
            seed: 0,
        }
    }

    pub fn with_mc_samples(mut self, mc_samples: usize) -> Self {
        self.mc_samples = mc_samples;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha_c(self.alpha, self.c)?;
        if self.mc_samples == 0 {
            return Err(Error::Domain("mc_samples must be positive".into()));
        }
        Ok(())
    }

    /// `p / alpha <= 8`: the dimension assumption behind the tuning guarantees
    /// fails. Callers should warn; it is not an error.
    pub fn violates_dimension_assumption(&self, p: usize) -> bool {
        p as f64 / self.alpha <= 8.0
    }
}

/// `lambda` by the rule in `spec`.
pub fn select_lambda(
    spec: &TuningSpec,
    problem: &ModelProblem,
    beta_star: Option<&Coefficients>,
) -> Result<f64> {
    spec.validate()?;
    let q = 1.0 - spec.alpha;
    match spec.rule {
        TuningRule::Asymptotic => lambda_asymptotic(problem.n(), problem.p(), spec.alpha, spec.c),
        TuningRule::GaussianApprox => {
            let dist = simulate_sup_score_gaussian(problem, spec.mc_samples, spec.seed)?;
            Ok(spec.c * dist.quantile(q)?)
        }
        TuningRule::ExactOracle => {
            let beta_star = beta_star.ok_or(Error::MissingOracle)?;
            let dist = simulate_sup_score_oracle(problem, beta_star, spec.mc_samples, spec.seed)?;
            Ok(spec.c * dist.quantile(q)?)
        }
    }
}

/// Monte Carlo estimate of `P(lambda >= c H)` under fresh responses.
pub fn coverage_check(
    problem: &ModelProblem,
    beta_star: &Coefficients,
    lambda: f64,
    c: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials < 100 {
        return Err(Error::Domain(format!("coverage needs at least 100 trials, got {trials}")));
    }
    let sampler = OracleResampler::new(problem, beta_star)?;
    let mut buf = alloc::vec![0.0; problem.n()];
    let mut hits = 0usize;
    for k in 0..trials as u64 {
        if lambda >= c * sampler.draw(problem, seed, k, &mut buf)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
