//! Reachable state space of the belief MDP.
//!
//! With linear cost, interior states are in bijection with triples
//! `(l, N, X)`: the layer index, the total sample size, and the total success
//! count. Layer `l ≥ 1` holds every pair with `l ≤ N ≤ l·n_max` and
//! `0 ≤ X ≤ N`; layer 0 is the single prior state. States inside the
//! rejection region (`log f ≥ log(1/κ)`) are enumerated but flagged absorbing
//! and never expanded by the solver.

use std::sync::Arc;

use crate::config::{ProtocolConfig, TestProcessKind};
use crate::error::{Error, Result};
use crate::mixture::MixtureCache;
use crate::model::{lambda, BeliefState};

/// Default cap on the number of enumerated states.
pub const DEFAULT_STATE_CAP: u128 = 100_000_000;

/// One time layer: all `(N, X)` pairs with `n_lo ≤ N ≤ n_hi`.
#[derive(Debug, Clone)]
pub struct Layer {
    pub n_lo: u32,
    pub n_hi: u32,
    /// Start index of each N row within the layer's state arrays.
    offsets: Vec<usize>,
    len: usize,
}

impl Layer {
    fn new(n_lo: u32, n_hi: u32) -> Self {
        let mut offsets = Vec::with_capacity((n_hi - n_lo + 1) as usize);
        let mut acc = 0usize;
        for n in n_lo..=n_hi {
            offsets.push(acc);
            acc += n as usize + 1;
        }
        Self {
            n_lo,
            n_hi,
            offsets,
            len: acc,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Index of `(N, X)` within this layer's arrays.
    pub fn index(&self, total_n: u32, total_x: u32) -> Option<usize> {
        if total_n < self.n_lo || total_n > self.n_hi || total_x > total_n {
            return None;
        }
        Some(self.offsets[(total_n - self.n_lo) as usize] + total_x as usize)
    }
}

/// Enumerated layers plus the per-N rejection thresholds.
#[derive(Debug)]
pub struct StateSpace {
    pub horizon_t: u32,
    pub n_max: u32,
    layers: Vec<Layer>,
    /// Per total sample size N, the smallest X with `log f ≥ log(1/κ)`;
    /// `N + 1` when no success count rejects at that N.
    x_reject: Vec<u32>,
    pub lambda: f64,
    pub log_inv_kappa: f64,
}

impl StateSpace {
    /// Number of layers, `T + 2` (layer 0 through layer T+1).
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, l: u32) -> Option<&Layer> {
        self.layers.get(l as usize)
    }

    /// Smallest rejecting success count at total sample size N.
    pub fn x_reject(&self, total_n: u32) -> u32 {
        self.x_reject[total_n as usize]
    }

    /// Whether the totals `(N, X)` lie in the rejection region.
    pub fn is_rejecting(&self, total_n: u32, total_x: u32) -> bool {
        total_x >= self.x_reject[total_n as usize]
    }

    /// Size of the reachable set in the counting convention of the size
    /// analysis: the absorbing opt-out state plus every post-trial state.
    /// (The prior state is not counted; the two conventions coincide because
    /// each contributes exactly one state.)
    pub fn reachable_count(&self) -> u128 {
        1 + self
            .layers
            .iter()
            .skip(1)
            .map(|l| l.len() as u128)
            .sum::<u128>()
    }

    /// Validates that a `(layer, N, X)` triple belongs to the space and
    /// returns its in-layer index.
    pub fn checked_index(&self, l: u32, total_n: u32, total_x: u32) -> Result<usize> {
        self.layer(l)
            .and_then(|layer| layer.index(total_n, total_x))
            .ok_or(Error::UnknownState {
                layer: l,
                total_n,
                total_x,
            })
    }

    /// Belief-state view of a grid point.
    pub fn state(&self, l: u32, total_n: u32, total_x: u32) -> BeliefState {
        BeliefState {
            t: l,
            total_n,
            total_x,
        }
    }
}

/// Closed-form size of the reachable set (opt-out state included):
/// `1 + Σ_{t=0}^{T} Σ_{N=t+1}^{(t+1)·n_max} (N+1)`, evaluated as the cubic
/// polynomial in T.
pub fn closed_form_state_count(horizon_t: u32, n_max: u32) -> u128 {
    let t = horizon_t as u128;
    let n = n_max as u128;
    let quad = (t + 1) * (t + 2) * (2 * t + 3); // 6·Σ (t+1)²
    let lin = (t + 1) * (t + 2); // 2·Σ (t+1)
    // All terms over the common denominator 12.
    ((n * n - 1) * quad + 3 * (3 * n - 1) * lin + 12 * (t + 1) + 12) / 12
}

/// Enumerates the reachable state space under the default state cap.
pub fn enumerate_states(cfg: &ProtocolConfig) -> Result<Arc<StateSpace>> {
    enumerate_states_with_cap(cfg, DEFAULT_STATE_CAP)
}

/// Enumerates the reachable state space, failing if it would exceed `cap`.
pub fn enumerate_states_with_cap(cfg: &ProtocolConfig, cap: u128) -> Result<Arc<StateSpace>> {
    let predicted = closed_form_state_count(cfg.horizon_t, cfg.n_max);
    if predicted > cap {
        return Err(Error::ResourceCap {
            states: predicted,
            cap,
        });
    }
    let mut layers = Vec::with_capacity(cfg.horizon_t as usize + 2);
    layers.push(Layer::new(0, 0));
    for l in 1..=cfg.horizon_t + 1 {
        layers.push(Layer::new(l, l * cfg.n_max));
    }
    let n_total_max = (cfg.horizon_t + 1) * cfg.n_max;
    let x_reject = rejection_thresholds(cfg, n_total_max)?;
    let space = StateSpace {
        horizon_t: cfg.horizon_t,
        n_max: cfg.n_max,
        layers,
        x_reject,
        lambda: lambda(cfg.theta_baseline),
        log_inv_kappa: cfg.log_inv_kappa(),
    };
    debug_assert_eq!(space.reachable_count(), predicted);
    Ok(Arc::new(space))
}

/// Per-N smallest rejecting success count. Both test processes are strictly
/// increasing in X at fixed N, so the rejection set at each N is an upper
/// interval of success counts.
fn rejection_thresholds(cfg: &ProtocolConfig, n_total_max: u32) -> Result<Vec<u32>> {
    let threshold = cfg.log_inv_kappa();
    let mut out = Vec::with_capacity(n_total_max as usize + 1);
    match cfg.test_process_kind {
        TestProcessKind::Exponential => {
            let lam = lambda(cfg.theta_baseline);
            for n in 0..=n_total_max {
                // Smallest integer X with X − N·λ ≥ log(1/κ).
                let bound = threshold + n as f64 * lam;
                let mut x = bound.ceil() as i64;
                // ceil can land one off at representable-boundary values;
                // settle the exact ≥ comparison by direct check.
                while x > 0 && (x - 1) as f64 - n as f64 * lam >= threshold {
                    x -= 1;
                }
                while (x as f64) - n as f64 * lam < threshold {
                    x += 1;
                }
                out.push((x.max(0) as u32).min(n + 1));
            }
        }
        TestProcessKind::UniformMixture => {
            let cache = MixtureCache::new(cfg.theta_baseline, cfg.mixture);
            for n in 0..=n_total_max {
                if cache.log_f(n, n)? < threshold {
                    out.push(n + 1);
                    continue;
                }
                let (mut lo, mut hi) = (0u32, n); // f(lo) may or may not reject; f(hi) rejects
                if cache.log_f(n, 0)? >= threshold {
                    out.push(0);
                    continue;
                }
                // Invariant: f(N, lo) < 1/κ ≤ f(N, hi).
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if cache.log_f(n, mid)? >= threshold {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                out.push(hi);
            }
        }
    }
    Ok(out)
}
