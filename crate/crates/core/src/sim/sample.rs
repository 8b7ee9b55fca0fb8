//! Exact-distribution samplers on top of [`SplitMix64`].
//!
//! Binomial draws use inversion for small sizes and Hörmann's transformed
//! rejection with squeeze (BTRS) above; Beta draws go through
//! Marsaglia–Tsang gamma variates.

use crate::model::ln_gamma;
use crate::sim::rng::SplitMix64;

/// Size/mean cutoffs below which plain inversion is used.
const INVERSION_MAX_N: u32 = 64;
const INVERSION_MAX_MEAN: f64 = 10.0;

/// Draws `X ~ Bin(n, p)`.
pub fn binomial(rng: &mut SplitMix64, n: u32, p: f64) -> u32 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if p > 0.5 {
        return n - binomial_low(rng, n, 1.0 - p);
    }
    binomial_low(rng, n, p)
}

fn binomial_low(rng: &mut SplitMix64, n: u32, p: f64) -> u32 {
    if n <= INVERSION_MAX_N || n as f64 * p <= INVERSION_MAX_MEAN {
        binomial_inversion(rng, n, p)
    } else {
        binomial_btrs(rng, n, p)
    }
}

/// BINV: walk the cdf with the pmf recurrence.
fn binomial_inversion(rng: &mut SplitMix64, n: u32, p: f64) -> u32 {
    let ratio = p / (1.0 - p);
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut cdf = pmf;
    let u = rng.next_f64();
    let mut k = 0u32;
    while u >= cdf && k < n {
        pmf *= (n - k) as f64 / (k + 1) as f64 * ratio;
        cdf += pmf;
        k += 1;
    }
    k
}

/// BTRS transformed rejection (Hörmann 1993), valid for `n·p ≥ 10`,
/// `p ≤ 0.5`.
fn binomial_btrs(rng: &mut SplitMix64, n: u32, p: f64) -> u32 {
    let nf = n as f64;
    let spq = (nf * p * (1.0 - p)).sqrt();
    let b = 1.15 + 2.53 * spq;
    let a = -0.0873 + 0.0248 * b + 0.01 * p;
    let c = nf * p + 0.5;
    let v_r = 0.92 - 4.2 / b;
    let alpha = (2.83 + 5.1 / b) * spq;
    let lpq = (p / (1.0 - p)).ln();
    let m = ((nf + 1.0) * p).floor();
    let h = ln_gamma(m + 1.0) + ln_gamma(nf - m + 1.0);
    loop {
        let v = rng.next_f64();
        let u = rng.next_f64() - 0.5;
        let us = 0.5 - u.abs();
        let kf = ((2.0 * a / us + b) * u + c).floor();
        if kf < 0.0 || kf > nf {
            continue;
        }
        if us >= 0.07 && v <= v_r {
            return kf as u32;
        }
        let check = (v * alpha / (a / (us * us) + b)).ln();
        if check <= h - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0) + (kf - m) * lpq {
            return kf as u32;
        }
    }
}

/// Standard normal via Box–Muller.
pub fn standard_normal(rng: &mut SplitMix64) -> f64 {
    let u1 = rng.next_f64_open();
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Gamma(shape, 1) by Marsaglia–Tsang.
pub fn gamma(rng: &mut SplitMix64, shape: f64) -> f64 {
    if shape < 1.0 {
        let boost = rng.next_f64_open().powf(1.0 / shape);
        return boost * gamma(rng, shape + 1.0);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let factor = 1.0 + c * x;
        if factor <= 0.0 {
            continue;
        }
        let v = factor * factor * factor;
        let u = rng.next_f64_open();
        if u < 1.0 - 0.0331 * x * x * x * x {
            return d * v;
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Beta(a, b) from two gamma variates.
pub fn beta(rng: &mut SplitMix64, a: f64, b: f64) -> f64 {
    let x = gamma(rng, a);
    let y = gamma(rng, b);
    x / (x + y)
}
