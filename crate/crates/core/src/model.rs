//! Primitive mathematics of the approval protocol: the cost function,
//! e-values, the test-process statistic `f`, Bayesian belief updates, and the
//! Beta-Binomial outcome distribution.
//!
//! Everything is computed and compared in natural-log space. On the fiducial
//! state space the belief parameters reach the low hundreds and the plain
//! test-process value `exp(X − N·λ)` overflows an f64, while `X − N·λ` itself
//! stays small; the approval check is therefore `log f ≥ log(1/κ)` throughout.

use serde::{Deserialize, Serialize};

use crate::config::{ProtocolConfig, TestProcessKind};
use crate::error::{Error, Result};

/// The e-value shift `λ = log(1 + θᵇ(e−1))`.
///
/// For θᵇ ∈ (0,1) this lies strictly between 0 and 1, which makes `log f`
/// strictly increasing in successes and strictly decreasing in sample size.
pub fn lambda(theta_baseline: f64) -> f64 {
    (1.0 + theta_baseline * (std::f64::consts::E - 1.0)).ln()
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// A reachable interior state of the belief MDP, canonically indexed by the
/// time step `t`, the total sample size `N`, and the total success count `X`.
///
/// The belief parameters and the accumulated cost are derived:
/// `α = α₀ + X`, `β = β₀ + N − X`, `C = t·c₀ + N·c₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BeliefState {
    pub t: u32,
    pub total_n: u32,
    pub total_x: u32,
}

impl BeliefState {
    /// The state before any trial has run.
    pub fn initial() -> Self {
        Self {
            t: 0,
            total_n: 0,
            total_x: 0,
        }
    }

    pub fn alpha(&self, cfg: &ProtocolConfig) -> f64 {
        cfg.prior_alpha0 + self.total_x as f64
    }

    pub fn beta(&self, cfg: &ProtocolConfig) -> f64 {
        cfg.prior_beta0 + (self.total_n - self.total_x) as f64
    }

    /// Accumulated cost after `t` trials totalling `N` samples.
    pub fn cost(&self, cfg: &ProtocolConfig) -> f64 {
        if self.t == 0 {
            return 0.0;
        }
        self.t as f64 * cfg.cost_fixed + self.total_n as f64 * cfg.cost_per_sample
    }

    /// Checks the structural invariants `0 ≤ X ≤ N` and, for `t ≥ 1`,
    /// `t ≤ N ≤ t·n_max`.
    pub fn check(&self, cfg: &ProtocolConfig) -> Result<()> {
        if self.total_x > self.total_n {
            return Err(Error::Domain(format!(
                "successes {} exceed samples {}",
                self.total_x, self.total_n
            )));
        }
        if self.t == 0 {
            if self.total_n != 0 {
                return Err(Error::Domain("t = 0 state must have N = 0".into()));
            }
        } else if self.total_n < self.t || self.total_n > self.t * cfg.n_max {
            return Err(Error::Domain(format!(
                "N = {} unreachable in {} trials with n_max = {}",
                self.total_n, self.t, cfg.n_max
            )));
        }
        Ok(())
    }
}

/// Absorbing endpoints of the approval process. No reward flows out of
/// either.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalState {
    OptedOut,
    Approved,
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Log of the single-trial e-value `E(x, n) = exp(x − n·λ)`.
pub fn log_e_value(x: u32, n: u32, cfg: &ProtocolConfig) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain(format!(
            "e-value requires a positive sample size, got n = {n}"
        )));
    }
    if x > n {
        return Err(Error::Domain(format!("x = {x} exceeds n = {n}")));
    }
    Ok(x as f64 - n as f64 * lambda(cfg.theta_baseline))
}

/// Log of the test-process value at a state: `X − N·λ` for the exponential
/// process, or the log of the mixture integral when the config selects the
/// uniform-mixture process.
pub fn log_f(state: &BeliefState, cfg: &ProtocolConfig) -> Result<f64> {
    state.check(cfg)?;
    match cfg.test_process_kind {
        TestProcessKind::Exponential => Ok(log_f_exponential(
            state.total_n,
            state.total_x,
            cfg.theta_baseline,
        )),
        TestProcessKind::UniformMixture => crate::mixture::log_f_mix(state, cfg, &cfg.mixture),
    }
}

/// `X − N·λ`, the exponential-process statistic, without state validation.
pub fn log_f_exponential(total_n: u32, total_x: u32, theta_baseline: f64) -> f64 {
    total_x as f64 - total_n as f64 * lambda(theta_baseline)
}

/// Posterior update after observing `x` successes in a trial of size `n`:
/// `(t, N, X) → (t+1, N+n, X+x)`, i.e. `(α, β) → (α+x, β+n−x)`.
pub fn update_belief(
    state: &BeliefState,
    n: u32,
    x: u32,
    cfg: &ProtocolConfig,
) -> Result<BeliefState> {
    if n < 1 || n > cfg.n_max {
        return Err(Error::Domain(format!(
            "trial size {n} outside 1..={}",
            cfg.n_max
        )));
    }
    if x > n {
        return Err(Error::Domain(format!("x = {x} exceeds n = {n}")));
    }
    Ok(BeliefState {
        t: state.t + 1,
        total_n: state.total_n + n,
        total_x: state.total_x + x,
    })
}

/// `log Γ`, accurate to a few ulp for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `log B(a, b) = log Γ(a) + log Γ(b) − log Γ(a+b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `log C(n, x)` via log-gamma.
pub fn ln_choose(n: u32, x: u32) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(x as f64 + 1.0) - ln_gamma((n - x) as f64 + 1.0)
}

/// Log of the Beta-Binomial pmf
/// `BB(n, α, β)(x) = C(n, x) · B(x+α, n−x+β) / B(α, β)`.
pub fn log_beta_binomial_pmf(x: u32, n: u32, alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::Domain(format!(
            "Beta-Binomial requires positive finite parameters, got α = {alpha}, β = {beta}"
        )));
    }
    if x > n {
        return Err(Error::Domain(format!("x = {x} exceeds n = {n}")));
    }
    Ok(ln_choose(n, x) + ln_beta(x as f64 + alpha, (n - x) as f64 + beta) - ln_beta(alpha, beta))
}

/// Cost of one trial: 0 for opting out, `c₀ + c₁·n` otherwise.
pub fn trial_cost(n: u32, cfg: &ProtocolConfig) -> f64 {
    if n == 0 {
        0.0
    } else {
        cfg.cost_fixed + cfg.cost_per_sample * n as f64
    }
}

/// Total accumulated cost after `t` trials with `N` samples in total.
pub(crate) fn total_cost(t: u32, total_n: u32, cfg: &ProtocolConfig) -> f64 {
    t as f64 * cfg.cost_fixed + total_n as f64 * cfg.cost_per_sample
}
