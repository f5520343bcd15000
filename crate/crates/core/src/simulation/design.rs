//! Synthetic designs, coefficient vectors and responses.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::poisson::{sample_poisson, MAX_RATE};
use crate::error::{Error, Result};
use crate::math;
use crate::problem::{Coefficients, Design, ModelProblem};
use crate::rng::{stream_rng, StreamRng};

/// Centers every column and scales it to unit mean square, `(1/n) sum_i x_ij^2 = 1`.
pub fn standardize(x: &Design) -> Result<Design> {
    let (n, p) = (x.nrows(), x.ncols());
    let nf = n as f64;
    let mut data = x.as_slice().to_vec();
    for j in 0..p {
        let mean = (0..n).map(|i| data[i * p + j]).sum::<f64>() / nf;
        let scale = (0..n).fold(0.0f64, |m, i| m.max(data[i * p + j].abs()));
        for i in 0..n {
            data[i * p + j] -= mean;
        }
        let ms = (0..n).map(|i| data[i * p + j] * data[i * p + j]).sum::<f64>() / nf;
        let floor = 1e-12 * scale;
        if !(ms > floor * floor) || ms == 0.0 {
            return Err(Error::DegenerateColumn { column: j });
        }
        let inv = 1.0 / math::sqrt(ms);
        for i in 0..n {
            data[i * p + j] *= inv;
        }
    }
    Design::from_row_major(n, p, data)
}

/// `n x p` design with i.i.d. standard normal entries, standardized.
pub fn generate_design(n: usize, p: usize, seed: u64) -> Result<Design> {
    if n < 2 || p < 2 {
        return Err(Error::Domain(format!("design needs n, p >= 2, got {n}x{p}")));
    }
    let mut rng = stream_rng(seed, 0);
    let data: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
    standardize(&Design::from_row_major(n, p, data)?)
}

/// Where the non-zero coordinates of a generated coefficient vector sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupportPlacement {
    /// Coordinates `0..s`.
    #[default]
    Leading,
    /// A uniformly random subset of size `s`.
    Random,
}

/// Coefficients with `s` non-zero entries drawn from `N(0, scale^2)`.
pub fn generate_beta(p: usize, s: usize, scale: f64, seed: u64) -> Result<Coefficients> {
    generate_beta_placed(p, s, scale, seed, SupportPlacement::Leading)
}

pub fn generate_beta_placed(
    p: usize,
    s: usize,
    scale: f64,
    seed: u64,
    placement: SupportPlacement,
) -> Result<Coefficients> {
    if s > p {
        return Err(Error::Domain(format!("support size {s} exceeds dimension {p}")));
    }
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("scale must be finite and non-negative, got {scale}")));
    }
    let mut beta = alloc::vec![0.0; p];
    if scale == 0.0 {
        return Ok(Coefficients::new(beta));
    }
    let mut rng = stream_rng(seed, 0);
    let mut idx: Vec<usize> = (0..p).collect();
    if placement == SupportPlacement::Random {
        idx.shuffle(&mut rng);
        idx.truncate(s);
        idx.sort_unstable();
    }
    for &j in idx.iter().take(s) {
        let mut z: f64 = rng.sample(StandardNormal);
        while z == 0.0 {
            z = rng.sample(StandardNormal);
        }
        beta[j] = z * scale;
    }
    Ok(Coefficients::new(beta))
}

/// Poisson rates `exp(x_i^T beta)`, rejecting any above the sampler bound.
pub fn poisson_rates(x: &Design, beta: &Coefficients) -> Result<Vec<f64>> {
    let rates: Vec<f64> = x.mul_vec(beta.as_slice()).iter().map(|&e| math::exp(e)).collect();
    if let Some(&rate) = rates.iter().find(|r| !(**r <= MAX_RATE)) {
        return Err(Error::RateOverflow { rate, bound: MAX_RATE });
    }
    Ok(rates)
}

/// Draws `y_i ~ Poisson(rates_i)`.
pub fn sample_counts(rates: &[f64], rng: &mut StreamRng) -> Result<Vec<f64>> {
    rates
        .iter()
        .map(|&mu| sample_poisson(mu, rng).map(|k| k as f64))
        .collect()
}

/// Responses for `x` and `beta`, as a validated problem.
pub fn generate_problem(x: Design, beta: &Coefficients, seed: u64) -> Result<ModelProblem> {
    let rates = poisson_rates(&x, beta)?;
    let y = sample_counts(&rates, &mut stream_rng(seed, 0))?;
    ModelProblem::new(x, y)
}
