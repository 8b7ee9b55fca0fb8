//! Finite-horizon backward induction over the belief MDP.
//!
//! For every non-absorbing state and action `n`, the Bellman step needs the
//! Beta-Binomial expectation of the next-layer values. Summing the pmf
//! explicitly per (state, action) pair costs Θ((n_max)² · |layer|) per layer.
//! Instead, each layer is processed with the sequential-predictive view of
//! the Beta-Binomial: drawing a trial of size `n` from belief totals `(P, Y)`
//! is distributionally identical to `n` single draws whose success
//! probability is the posterior predictive `(α₀+Y)/(α₀+β₀+P)`. One backward
//! sweep in the number of remaining draws therefore yields, for every state
//! and every action at once,
//!
//! `U_m(P, Y) = p·U_{m−1}(P+1, Y+1) + (1−p)·U_{m−1}(P+1, Y)`,
//!
//! with `U_0` the end-of-trial value (approval payoff or next-layer value)
//! and `Q(S, n) = −c(n) + U_n(S)`. Linear cost is essential here: the
//! approval payoff after a trial ending at totals `(P, Y)` in layer `l+1`
//! depends only on `(l+1, P)`, not on how the samples were split into
//! trials.
//!
//! Four value surfaces ride through the same recursion: `V⁰`, the
//! approval-conditional cost `A`, and the approval / opt-out probabilities.
//! `V^ε` is never stored; it is derived as `V⁰ + ε·A`, so the decomposition
//! identity holds exactly by construction.

use std::sync::Arc;

use crate::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::mdp::policy::{AtomTables, SolvedPolicy};
use crate::mdp::space::{enumerate_states, StateSpace};
use crate::model::{total_cost, trial_cost};

/// Value-surface slots carried per state: `[V⁰, A, p_approve, p_optout]`.
pub(crate) const V0: usize = 0;
pub(crate) const A: usize = 1;
pub(crate) const P_APP: usize = 2;
pub(crate) const P_OPT: usize = 3;

#[inline]
fn tri(p: usize) -> usize {
    p * (p + 1) / 2
}

/// Solves the belief MDP at subsidy `epsilon`, enumerating the state space.
pub fn solve(cfg: &ProtocolConfig, epsilon: f64) -> Result<SolvedPolicy> {
    let space = enumerate_states(cfg)?;
    solve_with_space(cfg, &space, epsilon)
}

/// Solves the belief MDP on an already-enumerated state space. One table set
/// is produced per atom of the principal's belief Q; a zero-weight table for
/// the agent's own prior is appended when Q does not contain it, so the
/// simulator always finds the policy it must execute.
pub fn solve_with_space(
    cfg: &ProtocolConfig,
    space: &Arc<StateSpace>,
    epsilon: f64,
) -> Result<SolvedPolicy> {
    if !(0.0..=cfg.epsilon_max).contains(&epsilon) {
        return Err(Error::Domain(format!(
            "subsidy {epsilon} outside [0, {}]",
            cfg.epsilon_max
        )));
    }
    let mut priors: Vec<(f64, f64, f64)> = cfg
        .principal_belief_q
        .iter()
        .map(|atom| (atom.alpha0, atom.beta0, atom.weight))
        .collect();
    let matches_agent = |&(a, b, _): &(f64, f64, f64)| {
        (a - cfg.prior_alpha0).abs() <= 1e-12 && (b - cfg.prior_beta0).abs() <= 1e-12
    };
    let agent_atom = match priors.iter().position(matches_agent) {
        Some(i) => i,
        None => {
            priors.push((cfg.prior_alpha0, cfg.prior_beta0, 0.0));
            priors.len() - 1
        }
    };
    let atoms = priors
        .into_iter()
        .map(|(alpha0, beta0, weight)| solve_atom(cfg, space, alpha0, beta0, weight, epsilon))
        .collect();
    Ok(SolvedPolicy::new(
        epsilon,
        cfg.epsilon_max,
        Arc::clone(space),
        atoms,
        agent_atom,
    ))
}

fn solve_atom(
    cfg: &ProtocolConfig,
    space: &StateSpace,
    alpha0: f64,
    beta0: f64,
    weight: f64,
    epsilon: f64,
) -> AtomTables {
    let horizon_t = cfg.horizon_t;
    let n_max = cfg.n_max as usize;

    let p_total = (horizon_t as usize + 1) * n_max;
    let num: Vec<f64> = (0..=p_total).map(|y| alpha0 + y as f64).collect();
    let inv_den: Vec<f64> = (0..=p_total)
        .map(|p| 1.0 / (alpha0 + beta0 + p as f64))
        .collect();
    let costs: Vec<f64> = (0..=n_max).map(|n| trial_cost(n as u32, cfg)).collect();

    let mut values: Vec<Vec<[f64; 4]>> = vec![Vec::new(); horizon_t as usize + 1];
    let mut actions: Vec<Vec<u16>> = vec![Vec::new(); horizon_t as usize + 1];
    // Layer T+1 terminates with no reward: all four surfaces are zero.
    let mut next: Vec<[f64; 4]> = vec![[0.0; 4]; space.layer(horizon_t + 1).unwrap().len()];

    let mut urn: Vec<[f64; 4]> = Vec::new();
    for l in (0..=horizon_t).rev() {
        let layer = space.layer(l).unwrap();
        let next_layer = space.layer(l + 1).unwrap();
        let p_hi = (l as usize + 1) * n_max;
        urn.clear();
        urn.resize(tri(p_hi + 1), [0.0; 4]);

        // Base case: value at the end of a trial with totals (P, Y).
        let cost_fixed_part = total_cost(l + 1, 0, cfg);
        for p in (l as usize + 1)..=p_hi {
            let row = tri(p);
            let x_rej = space.x_reject(p as u32) as usize;
            let approved_pay = [
                cfg.rho_agent,
                cost_fixed_part + p as f64 * cfg.cost_per_sample,
                1.0,
                0.0,
            ];
            let next_base = next_layer.index(p as u32, 0).unwrap();
            for y in 0..=p {
                urn[row + y] = if y >= x_rej {
                    approved_pay
                } else {
                    next[next_base + y]
                };
            }
        }

        let mut best_qe = vec![f64::NEG_INFINITY; layer.len()];
        let mut best_val = vec![[0.0f64; 4]; layer.len()];
        let mut best_action = vec![0u16; layer.len()];
        let extract_lo = layer.n_lo as usize;
        let extract_hi = layer.n_hi as usize;

        for (m, &cost_m) in costs.iter().enumerate().skip(1) {
            for p in (l as usize)..=(p_hi - m) {
                let (head, tail) = urn.split_at_mut(tri(p + 1));
                let dst = &mut head[tri(p)..];
                let src = &tail[..p + 2];
                let scale = inv_den[p];
                for y in 0..=p {
                    let prob = num[y] * scale;
                    let lo = src[y];
                    let hi = src[y + 1];
                    let mut out = [0.0; 4];
                    for k in 0..4 {
                        out[k] = lo[k] + prob * (hi[k] - lo[k]);
                    }
                    dst[y] = out;
                }
                if p >= extract_lo && p <= extract_hi {
                    let x_rej = space.x_reject(p as u32) as usize;
                    let state_base = layer.index(p as u32, 0).unwrap();
                    for (y, cell) in dst.iter().enumerate().take(x_rej.min(p + 1)) {
                        let q0 = cell[V0] - cost_m;
                        let qe = q0 + epsilon * cell[A];
                        let idx = state_base + y;
                        if qe > best_qe[idx] {
                            best_qe[idx] = qe;
                            best_val[idx] = [q0, cell[A], cell[P_APP], cell[P_OPT]];
                            best_action[idx] = m as u16;
                        }
                    }
                }
            }
        }

        // Finalize the layer: absorbing states are never expanded; interior
        // states opt out whenever the best action value is not positive.
        let mut layer_vals = vec![[0.0f64; 4]; layer.len()];
        let mut layer_acts = vec![0u16; layer.len()];
        for p in layer.n_lo..=layer.n_hi {
            let x_rej = space.x_reject(p) as usize;
            let base = layer.index(p, 0).unwrap();
            for y in 0..=(p as usize) {
                let idx = base + y;
                if y >= x_rej {
                    layer_vals[idx] = [0.0, 0.0, 1.0, 0.0];
                } else if best_qe[idx] > 0.0 {
                    layer_vals[idx] = best_val[idx];
                    layer_acts[idx] = best_action[idx];
                } else {
                    layer_vals[idx] = [0.0, 0.0, 0.0, 1.0];
                }
            }
        }
        next = layer_vals.clone();
        values[l as usize] = layer_vals;
        actions[l as usize] = layer_acts;
    }

    AtomTables {
        alpha0,
        beta0,
        weight,
        values,
        actions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_beta_binomial_pmf, BeliefState};
    use crate::test_support::{fiducial_config, small_config};

    /// Exhaustive expectimax over all outcome-contingent action trees,
    /// computed with the direct Beta-Binomial pmf. Independent of the urn
    /// recursion in the solver.
    pub(crate) fn oracle_value(
        cfg: &ProtocolConfig,
        epsilon: f64,
        l: u32,
        total_n: u32,
        total_x: u32,
    ) -> f64 {
        if l > cfg.horizon_t {
            return 0.0;
        }
        let alpha = cfg.prior_alpha0 + total_x as f64;
        let beta = cfg.prior_beta0 + (total_n - total_x) as f64;
        let threshold = cfg.log_inv_kappa();
        let lam = crate::model::lambda(cfg.theta_baseline);
        let mut best = 0.0f64;
        for n in 1..=cfg.n_max {
            let mut q = -trial_cost(n, cfg);
            for x in 0..=n {
                let w = log_beta_binomial_pmf(x, n, alpha, beta).unwrap().exp();
                let nn = total_n + n;
                let nx = total_x + x;
                let rejecting = nx as f64 - nn as f64 * lam >= threshold;
                let cont = if rejecting {
                    cfg.rho_agent + epsilon * total_cost(l + 1, nn, cfg)
                } else {
                    oracle_value(cfg, epsilon, l + 1, nn, nx)
                };
                q += w * cont;
            }
            best = best.max(q);
        }
        best
    }

    #[test]
    fn matches_exhaustive_oracle_on_small_mdps() {
        let mut cfg = small_config(1, 3);
        cfg.kappa = 0.5;
        cfg.rho_agent = 4.0;
        cfg.cost_fixed = 0.3;
        cfg.cost_per_sample = 0.25;
        let cfg = cfg.validate().unwrap();
        for &eps in &[0.0, 0.4, 0.9] {
            let policy = solve(&cfg, eps).unwrap();
            let direct = oracle_value(&cfg, eps, 0, 0, 0);
            let root = policy.value_at(&BeliefState::initial(), eps).unwrap();
            assert!(
                (root - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "ε = {eps}: {root} vs oracle {direct}"
            );
        }
    }

    #[test]
    fn opt_out_dominates_when_benefit_cannot_cover_cost() {
        let mut cfg = small_config(0, 3);
        cfg.rho_agent = 0.5;
        cfg.cost_fixed = 10.0;
        cfg.cost_per_sample = 1.0;
        let cfg = cfg.validate().unwrap();
        let policy = solve(&cfg, 0.0).unwrap();
        let root = policy.root_avg();
        assert_eq!(root.first_action, 0);
        assert_eq!(policy.value_at(&BeliefState::initial(), 0.0).unwrap(), 0.0);
        assert_eq!(root.p_approve, 0.0);
        assert_eq!(root.p_optout, 1.0);
    }

    #[test]
    fn rejects_out_of_range_subsidy() {
        let cfg = fiducial_config();
        assert!(matches!(solve(&cfg, -0.1), Err(Error::Domain(_))));
        assert!(matches!(solve(&cfg, 0.95), Err(Error::Domain(_))));
    }

    #[test]
    fn probability_surfaces_partition_terminal_outcomes() {
        let mut cfg = small_config(2, 4);
        cfg.kappa = 0.3;
        cfg.rho_agent = 6.0;
        cfg.cost_fixed = 0.5;
        cfg.cost_per_sample = 0.1;
        let cfg = cfg.validate().unwrap();
        let policy = solve(&cfg, 0.2).unwrap();
        let space = policy.space();
        let atom = policy.atom(policy.agent_atom());
        for l in 0..=cfg.horizon_t {
            let layer = space.layer(l).unwrap();
            for n in layer.n_lo..=layer.n_hi {
                for x in 0..=n {
                    let idx = layer.index(n, x).unwrap();
                    let v = atom.values[l as usize][idx];
                    assert!((0.0..=1.0).contains(&v[P_APP]));
                    assert!((0.0..=1.0).contains(&v[P_OPT]));
                    assert!(v[P_APP] + v[P_OPT] <= 1.0 + 1e-12);
                    // Value bound: V^ε ≤ ρᴬ + ε·C(S).
                    let cost = total_cost(l, n, &cfg);
                    let veps = v[V0] + 0.2 * v[A];
                    assert!(veps <= cfg.rho_agent + 0.2 * cost + 1e-9);
                    assert!(veps >= -1e-12);
                }
            }
        }
    }
}
