//! Mixture test supermartingale: a uniform mixture over alternatives on
//! `(θᵇ, 1)` replaces the single exponentiated-statistic e-value.
//!
//! The statistic is
//! `f_mix(α, β) = ∫ p_mix(θ) · (θ/θᵇ)^(α−α₀) · ((1−θ)/(1−θᵇ))^(β−β₀) dθ`
//! over `(θᵇ, 1)`. The exponents at a state are the totals `X` and `N − X`,
//! so the value does not depend on the prior. The integral is evaluated by
//! fixed-order Gauss–Legendre quadrature with the integrand kept in log space
//! and combined by a max-shifted exponential sum; every returned value is
//! cross-checked by node doubling.

use std::collections::HashMap;
use std::sync::RwLock;

use crate::config::{MixtureSpec, ProtocolConfig};
use crate::error::{Error, Result};
use crate::model::BeliefState;

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th positive root.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..order {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = order as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// One quadrature pass at the given order. The uniform mixing density
/// `1/(1−θᵇ)` cancels against the interval half-length of the node transform,
/// leaving weights `w_i/2`.
fn quadrature_log_f(x_total: f64, fail_total: f64, theta_b: f64, order: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let half = (1.0 - theta_b) / 2.0;
    let mid = (1.0 + theta_b) / 2.0;
    let log_theta_b = theta_b.ln();
    let log_one_minus_b = (1.0 - theta_b).ln();
    let terms: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&u, &w)| {
            let theta = mid + half * u;
            (w / 2.0).ln()
                + x_total * (theta.ln() - log_theta_b)
                + fail_total * ((1.0 - theta).ln() - log_one_minus_b)
        })
        .collect();
    log_sum_exp(&terms)
}

/// Log of `f_mix` for nonnegative real exponents `x_total = α − α₀` and
/// `fail_total = β − β₀`, validated by node doubling.
pub fn log_f_mix_offsets(
    x_total: f64,
    fail_total: f64,
    theta_b: f64,
    spec: &MixtureSpec,
) -> Result<f64> {
    if !(x_total >= 0.0 && fail_total >= 0.0) {
        return Err(Error::Domain(format!(
            "mixture exponents must be nonnegative, got ({x_total}, {fail_total})"
        )));
    }
    let order = spec.quadrature_nodes.max(16) as usize;
    let coarse = quadrature_log_f(x_total, fail_total, theta_b, order);
    let fine = quadrature_log_f(x_total, fail_total, theta_b, order * 2);
    let scale = fine.abs().max(1.0);
    if (coarse - fine).abs() > spec.rel_tolerance.max(1e-14) * scale {
        return Err(Error::Numerical(format!(
            "quadrature for f_mix({x_total}, {fail_total}) did not stabilize: \
             {coarse} vs {fine} at {order}/{} nodes",
            order * 2
        )));
    }
    Ok(fine)
}

/// Log of the mixture test-process value at a belief state.
pub fn log_f_mix(state: &BeliefState, cfg: &ProtocolConfig, spec: &MixtureSpec) -> Result<f64> {
    state.check(cfg)?;
    log_f_mix_offsets(
        state.total_x as f64,
        (state.total_n - state.total_x) as f64,
        cfg.theta_baseline,
        spec,
    )
}

/// Memoized `log_f_mix` on integer totals, shared by the solver and the
/// simulator. The DP queries each `(N, X)` pair many times and the integral
/// is the hot path.
pub struct MixtureCache {
    theta_b: f64,
    spec: MixtureSpec,
    values: RwLock<HashMap<(u32, u32), f64>>,
}

impl MixtureCache {
    pub fn new(theta_b: f64, spec: MixtureSpec) -> Self {
        Self {
            theta_b,
            spec,
            values: RwLock::new(HashMap::new()),
        }
    }

    pub fn log_f(&self, total_n: u32, total_x: u32) -> Result<f64> {
        if let Some(&v) = self.values.read().unwrap().get(&(total_n, total_x)) {
            return Ok(v);
        }
        let v = log_f_mix_offsets(
            total_x as f64,
            (total_n - total_x) as f64,
            self.theta_b,
            &self.spec,
        )?;
        self.values.write().unwrap().insert((total_n, total_x), v);
        Ok(v)
    }
}

/// Tabulates `1{log f_mix ≥ log(1/κ)}` over a grid of belief parameters.
/// Grid values must not fall below the prior.
pub fn rejection_region_table(
    cfg: &ProtocolConfig,
    spec: &MixtureSpec,
    alpha_values: &[f64],
    beta_values: &[f64],
) -> Result<Vec<Vec<bool>>> {
    let threshold = cfg.log_inv_kappa();
    let mut rows = Vec::with_capacity(alpha_values.len());
    for &alpha in alpha_values {
        if alpha < cfg.prior_alpha0 {
            return Err(Error::Domain(format!(
                "grid alpha {alpha} below prior {}",
                cfg.prior_alpha0
            )));
        }
        let mut row = Vec::with_capacity(beta_values.len());
        for &beta in beta_values {
            if beta < cfg.prior_beta0 {
                return Err(Error::Domain(format!(
                    "grid beta {beta} below prior {}",
                    cfg.prior_beta0
                )));
            }
            let v = log_f_mix_offsets(
                alpha - cfg.prior_alpha0,
                beta - cfg.prior_beta0,
                cfg.theta_baseline,
                spec,
            )?;
            row.push(v >= threshold);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_e_value, log_f_exponential};
    use crate::test_support::fiducial_config;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (nodes, weights) = gauss_legendre(8);
        // Degree ≤ 2·8−1 polynomials are exact; check x², x⁶ and the constant.
        for (power, exact) in [(0u32, 2.0), (2, 2.0 / 3.0), (6, 2.0 / 7.0)] {
            let got: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(&x, &w)| w * x.powi(power as i32))
                .sum();
            assert!((got - exact).abs() < 1e-14, "x^{power}: {got} vs {exact}");
        }
    }

    #[test]
    fn empty_state_integrates_to_one() {
        let cfg = fiducial_config();
        let v = log_f_mix(&BeliefState::initial(), &cfg, &MixtureSpec::default()).unwrap();
        assert!(v.abs() < 1e-13);
    }

    #[test]
    fn single_alternative_likelihood_ratio_equals_e_value() {
        // The non-mixed e-value is the likelihood ratio against the unique
        // alternative θ̃ with e = θ̃(1−θᵇ)/((1−θ̃)θᵇ); this identity is what
        // the mixture construction generalizes.
        let cfg = fiducial_config();
        let theta_b = cfg.theta_baseline;
        let e = std::f64::consts::E;
        let theta_tilde = e * theta_b / (1.0 - theta_b + e * theta_b);
        for (x, n) in [(0u32, 1u32), (3, 5), (17, 20), (40, 80)] {
            let lr = x as f64 * (theta_tilde / theta_b).ln()
                + (n - x) as f64 * ((1.0 - theta_tilde) / (1.0 - theta_b)).ln();
            let ev = log_e_value(x, n, &cfg).unwrap();
            assert!((lr - ev).abs() < 1e-12, "({x},{n}): {lr} vs {ev}");
        }
    }

    #[test]
    fn monotone_in_successes_and_all_failures_never_reject() {
        let cfg = fiducial_config();
        let spec = MixtureSpec::default();
        let cache = MixtureCache::new(cfg.theta_baseline, spec);
        for n in [5u32, 40, 200] {
            let mut prev = f64::NEG_INFINITY;
            for x in 0..=n {
                let v = cache.log_f(n, x).unwrap();
                assert!(v > prev, "not increasing at N = {n}, X = {x}");
                prev = v;
            }
            assert!(cache.log_f(n, 0).unwrap() < 0.0);
        }
    }

    #[test]
    fn node_doubling_is_stable_across_fiducial_scale() {
        let theta_b = 0.5;
        let spec = MixtureSpec::default();
        for (n, x) in [(1u32, 1u32), (50, 30), (400, 230), (800, 470), (800, 800)] {
            let base = log_f_mix_offsets(x as f64, (n - x) as f64, theta_b, &spec).unwrap();
            let doubled = quadrature_log_f(
                x as f64,
                (n - x) as f64,
                theta_b,
                2 * spec.quadrature_nodes as usize,
            );
            let quadrupled = quadrature_log_f(
                x as f64,
                (n - x) as f64,
                theta_b,
                4 * spec.quadrature_nodes as usize,
            );
            assert!((doubled - quadrupled).abs() <= 1e-8 * doubled.abs().max(1.0));
            assert!((base - quadrupled).abs() <= 1e-8 * base.abs().max(1.0));
        }
    }

    #[test]
    fn supermartingale_ratio_bounded_by_one_under_null() {
        // Exact check of E[f_mix(after)/f_mix(before)] ≤ 1 under θ ≤ θᵇ−0.01
        // by binomial summation at sampled histories (trials of size 20).
        let cfg = fiducial_config();
        let cache = MixtureCache::new(cfg.theta_baseline, MixtureSpec::default());
        let histories = [(0u32, 0u32), (20, 9), (40, 22), (60, 28), (100, 55)];
        let n = 20u32;
        for &theta in &[0.3, 0.45, cfg.theta_baseline - 0.01] {
            for &(big_n, big_x) in &histories {
                let before = cache.log_f(big_n, big_x).unwrap();
                let mut expectation = 0.0;
                let mut pmf = (1.0 - theta).powi(n as i32);
                for x in 0..=n {
                    let after = cache.log_f(big_n + n, big_x + x).unwrap();
                    expectation += pmf * (after - before).exp();
                    if x < n {
                        pmf *= (n - x) as f64 / (x + 1) as f64 * theta / (1.0 - theta);
                    }
                }
                assert!(
                    expectation <= 1.0 + 1e-8,
                    "ratio expectation {expectation} at θ = {theta}, history ({big_n},{big_x})"
                );
            }
        }
    }

    #[test]
    fn region_disagrees_with_exponential_in_both_directions() {
        // The mixture region is neither a subset nor a superset of the linear
        // exponential region: the boundary curves cross.
        let cfg = fiducial_config();
        let spec = MixtureSpec::default();
        let threshold = cfg.log_inv_kappa();
        let mut mix_only = 0u32;
        let mut exp_only = 0u32;
        for n in 1..=120u32 {
            for x in 0..=n {
                let exp_rej = log_f_exponential(n, x, cfg.theta_baseline) >= threshold;
                let mix_rej =
                    log_f_mix_offsets(x as f64, (n - x) as f64, cfg.theta_baseline, &spec).unwrap()
                        >= threshold;
                match (exp_rej, mix_rej) {
                    (true, false) => exp_only += 1,
                    (false, true) => mix_only += 1,
                    _ => {}
                }
            }
        }
        assert!(exp_only > 0, "exponential region nowhere exceeds mixture");
        assert!(mix_only > 0, "mixture region nowhere exceeds exponential");
    }

    #[test]
    fn rejection_table_matches_pointwise_checks() {
        let cfg = fiducial_config();
        let spec = MixtureSpec::default();
        let alphas: Vec<f64> = (1..=10).map(|a| a as f64).collect();
        let betas: Vec<f64> = (1..=10).map(|b| b as f64).collect();
        let table = rejection_region_table(&cfg, &spec, &alphas, &betas).unwrap();
        for (i, &alpha) in alphas.iter().enumerate() {
            for (j, &beta) in betas.iter().enumerate() {
                let v = log_f_mix_offsets(
                    alpha - cfg.prior_alpha0,
                    beta - cfg.prior_beta0,
                    cfg.theta_baseline,
                    &spec,
                )
                .unwrap();
                assert_eq!(table[i][j], v >= cfg.log_inv_kappa());
            }
        }
        assert!(rejection_region_table(&cfg, &spec, &[0.5], &[1.0]).is_err());
    }
}
