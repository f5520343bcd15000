//! Exact Poisson variates.
//!
//! Sequential-search inversion below rate 10, Hormann's transformed
//! rejection with squeeze (PTRS) at and above it.

use alloc::format;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;

/// Largest rate accepted by [`sample_poisson`].
pub const MAX_RATE: f64 = 1e12;

const INVERSION_LIMIT: f64 = 10.0;

/// One draw from Poisson(`mu`), `0 < mu <= 1e12`.
pub fn sample_poisson<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> Result<u64> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("Poisson rate must be positive, got {mu}")));
    }
    if !(mu <= MAX_RATE) {
        return Err(Error::RateOverflow {
            rate: mu,
            bound: MAX_RATE,
        });
    }
    if mu < INVERSION_LIMIT {
        Ok(inversion(mu, rng))
    } else {
        Ok(ptrs(mu, rng))
    }
}

fn inversion<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut prob = math::exp(-mu);
    let mut cdf = prob;
    // The cap only matters when rounding keeps the accumulated cdf below u.
    while u > cdf && k < 1000 {
        k += 1;
        prob *= mu / k as f64;
        cdf += prob;
    }
    k
}

fn ptrs<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> u64 {
    let log_mu = math::ln(mu);
    let b = 0.931 + 2.53 * math::sqrt(mu);
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        if us <= 0.0 {
            continue;
        }
        let k = math::floor((2.0 * a / us + b) * u + mu + 0.43);
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = math::ln(v) + math::ln(inv_alpha) - math::ln(a / (us * us) + b);
        let rhs = -mu + k * log_mu - math::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}
