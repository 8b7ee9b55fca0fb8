//! Monte Carlo simulation of the true approval process under a hidden
//! efficacy θ*, with the agent executing a solved policy.
//!
//! Realized payoffs follow the protocol accounting exactly: with total cost
//! `ΣC` and subsidy ε, approval pays the agent `ρᴬ + ε·ΣC − ΣC` and society
//! `ρˢ − ε·ΣC`; without approval the agent eats `−ΣC` and society gets 0.

use serde::Serialize;

use crate::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::mdp::SolvedPolicy;
use crate::model::trial_cost;
use crate::sim::rng::SplitMix64;
use crate::sim::sample::{beta, binomial};
use crate::subsidy::{optimize, SubsidySolution};

/// Stream offset separating bootstrap resampling from rollout streams.
const BOOTSTRAP_STREAM_BASE: u64 = 1 << 62;

/// How one rollout ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalOutcome {
    Approved,
    OptedOut,
    HorizonExhausted,
}

/// Which non-sequential baseline to run alongside the main simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    #[default]
    None,
    SingleTrial,
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy)]
pub struct RolloutConfig {
    pub theta_star: f64,
    pub num_rollouts: u32,
    pub bootstrap_resamples: u32,
    pub rng_seed: u64,
    pub baseline: BaselineKind,
    pub baseline_n_max: u32,
}

impl RolloutConfig {
    pub fn new(theta_star: f64, rng_seed: u64) -> Self {
        Self {
            theta_star,
            num_rollouts: 100_000,
            bootstrap_resamples: 1000,
            rng_seed,
            baseline: BaselineKind::None,
            baseline_n_max: 800,
        }
    }

    pub fn with_rollouts(mut self, num_rollouts: u32) -> Self {
        self.num_rollouts = num_rollouts;
        self
    }

    fn check(&self) -> Result<()> {
        if self.num_rollouts < 1 {
            return Err(Error::Domain("num_rollouts must be at least 1".into()));
        }
        if self.bootstrap_resamples < 1 {
            return Err(Error::Domain(
                "bootstrap_resamples must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.theta_star) {
            return Err(Error::Domain(format!(
                "theta_star must lie in [0,1], got {}",
                self.theta_star
            )));
        }
        Ok(())
    }
}

/// One simulated pass through the approval process.
#[derive(Debug, Clone, Serialize)]
pub struct RolloutRecord {
    /// (trial size, successes) per conducted trial.
    pub trials: Vec<(u16, u16)>,
    pub terminal: TerminalOutcome,
    pub total_cost: f64,
    pub agent_payoff: f64,
    pub social_payoff: f64,
}

/// A point estimate with its 95% bootstrap percentile interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EstimateCi {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

impl EstimateCi {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lo && value <= self.hi
    }
}

/// Aggregates over a batch of rollouts.
#[derive(Debug, Clone, Serialize)]
pub struct BatchSummary {
    pub num_rollouts: u32,
    pub agent_utility: EstimateCi,
    pub social_utility: EstimateCi,
    pub approval_rate: EstimateCi,
    pub optout_rate: EstimateCi,
    pub horizon_rate: f64,
    pub mean_total_cost: f64,
    pub approvals: u32,
    pub optouts: u32,
    pub horizon_exhausted: u32,
}

/// Per-rollout records plus their summary.
#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub records: Vec<RolloutRecord>,
    pub summary: BatchSummary,
    pub epsilon: f64,
}

/// Simulates the true process at a fixed `θ* = rcfg.theta_star`.
pub fn simulate(
    policy: &SolvedPolicy,
    cfg: &ProtocolConfig,
    rcfg: &RolloutConfig,
) -> Result<RolloutBatch> {
    rcfg.check()?;
    run_batch(policy, cfg, rcfg, ThetaSource::Fixed(rcfg.theta_star))
}

/// Simulates with `θ*` drawn from the agent's prior in each rollout; the
/// mean realized agent utility estimates the anticipated utility.
pub fn simulate_prior_mixture(
    policy: &SolvedPolicy,
    cfg: &ProtocolConfig,
    rcfg: &RolloutConfig,
) -> Result<RolloutBatch> {
    rcfg.check()?;
    run_batch(
        policy,
        cfg,
        rcfg,
        ThetaSource::Prior(cfg.prior_alpha0, cfg.prior_beta0),
    )
}

/// Approval frequency under a null efficacy, with its confidence interval.
/// The anytime-validity guarantee bounds the true rate by κ.
pub fn false_positive_rate(
    cfg: &ProtocolConfig,
    policy: &SolvedPolicy,
    theta_null: f64,
    rcfg: &RolloutConfig,
) -> Result<EstimateCi> {
    if theta_null >= cfg.theta_baseline {
        return Err(Error::Domain(format!(
            "theta_null {theta_null} is not below the baseline {}",
            cfg.theta_baseline
        )));
    }
    let mut null_rcfg = *rcfg;
    null_rcfg.theta_star = theta_null;
    Ok(simulate(policy, cfg, &null_rcfg)?.summary.approval_rate)
}

/// Result of the single-trial (non-sequential) baseline at one subsidy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BaselineOutcome {
    pub optimal_n: u16,
    pub agent_value: f64,
    pub social_utility: f64,
}

/// Restricts the config to a single trial with the given maximum size.
pub fn single_trial_config(cfg: &ProtocolConfig, baseline_n_max: u32) -> Result<ProtocolConfig> {
    let mut base = cfg.clone();
    base.horizon_t = 0;
    base.n_max = baseline_n_max;
    base.validate()
}

/// Solves the single-trial baseline at subsidy ε.
pub fn baseline_single_trial(
    cfg: &ProtocolConfig,
    epsilon: f64,
    baseline_n_max: u32,
) -> Result<(BaselineOutcome, SolvedPolicy)> {
    let base = single_trial_config(cfg, baseline_n_max)?;
    let policy = crate::mdp::solve(&base, epsilon)?;
    let root = policy.root_avg();
    Ok((
        BaselineOutcome {
            optimal_n: root.first_action,
            agent_value: root.v0 + epsilon * root.a_cost,
            social_utility: policy.anticipated_social_utility(&base, epsilon),
        },
        policy,
    ))
}

/// Optimizes the subsidy for the single-trial baseline.
pub fn baseline_optimal_subsidy(
    cfg: &ProtocolConfig,
    baseline_n_max: u32,
) -> Result<SubsidySolution> {
    let base = single_trial_config(cfg, baseline_n_max)?;
    optimize(&base)
}

enum ThetaSource {
    Fixed(f64),
    Prior(f64, f64),
}

fn run_batch(
    policy: &SolvedPolicy,
    cfg: &ProtocolConfig,
    rcfg: &RolloutConfig,
    theta: ThetaSource,
) -> Result<RolloutBatch> {
    let space = policy.space().clone();
    let atom = policy.atom(policy.agent_atom());
    let epsilon = policy.epsilon();
    let horizon_t = space.horizon_t;
    let mut records = Vec::with_capacity(rcfg.num_rollouts as usize);

    for r in 0..rcfg.num_rollouts {
        let mut rng = SplitMix64::substream(rcfg.rng_seed, r as u64);
        let theta_star = match theta {
            ThetaSource::Fixed(t) => t,
            ThetaSource::Prior(a, b) => beta(&mut rng, a, b),
        };
        let mut l = 0u32;
        let mut total_n = 0u32;
        let mut total_x = 0u32;
        let mut total_cost = 0.0;
        let mut trials = Vec::new();
        let mut terminal = TerminalOutcome::HorizonExhausted;
        while l <= horizon_t {
            let layer = space.layer(l).unwrap();
            let idx = layer.index(total_n, total_x).ok_or(Error::UnknownState {
                layer: l,
                total_n,
                total_x,
            })?;
            let n = atom.action(l as usize, idx) as u32;
            if n == 0 {
                terminal = TerminalOutcome::OptedOut;
                break;
            }
            let x = binomial(&mut rng, n, theta_star);
            total_n += n;
            total_x += x;
            total_cost += trial_cost(n, cfg);
            trials.push((n as u16, x as u16));
            l += 1;
            if space.is_rejecting(total_n, total_x) {
                terminal = TerminalOutcome::Approved;
                break;
            }
        }
        let (agent_payoff, social_payoff) = match terminal {
            TerminalOutcome::Approved => (
                cfg.rho_agent + epsilon * total_cost - total_cost,
                cfg.rho_social - epsilon * total_cost,
            ),
            _ => (-total_cost, 0.0),
        };
        records.push(RolloutRecord {
            trials,
            terminal,
            total_cost,
            agent_payoff,
            social_payoff,
        });
    }

    let summary = summarize(&records, rcfg);
    Ok(RolloutBatch {
        records,
        summary,
        epsilon,
    })
}

fn summarize(records: &[RolloutRecord], rcfg: &RolloutConfig) -> BatchSummary {
    let n = records.len() as f64;
    let mut approvals = 0u32;
    let mut optouts = 0u32;
    let mut horizon = 0u32;
    let mut cost_sum = 0.0;
    for r in records {
        match r.terminal {
            TerminalOutcome::Approved => approvals += 1,
            TerminalOutcome::OptedOut => optouts += 1,
            TerminalOutcome::HorizonExhausted => horizon += 1,
        }
        cost_sum += r.total_cost;
    }
    let agent: Vec<f64> = records.iter().map(|r| r.agent_payoff).collect();
    let social: Vec<f64> = records.iter().map(|r| r.social_payoff).collect();
    let approved: Vec<f64> = records
        .iter()
        .map(|r| (r.terminal == TerminalOutcome::Approved) as u32 as f64)
        .collect();
    let opted: Vec<f64> = records
        .iter()
        .map(|r| (r.terminal == TerminalOutcome::OptedOut) as u32 as f64)
        .collect();
    BatchSummary {
        num_rollouts: records.len() as u32,
        agent_utility: bootstrap_ci(&agent, rcfg, 0),
        social_utility: bootstrap_ci(&social, rcfg, 1),
        approval_rate: bootstrap_ci(&approved, rcfg, 2),
        optout_rate: bootstrap_ci(&opted, rcfg, 3),
        horizon_rate: horizon as f64 / n,
        mean_total_cost: cost_sum / n,
        approvals,
        optouts,
        horizon_exhausted: horizon,
    }
}

/// Percentile bootstrap over whole rollouts.
fn bootstrap_ci(values: &[f64], rcfg: &RolloutConfig, metric: u64) -> EstimateCi {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut resampled = Vec::with_capacity(rcfg.bootstrap_resamples as usize);
    for b in 0..rcfg.bootstrap_resamples as u64 {
        let mut rng = SplitMix64::substream(
            rcfg.rng_seed,
            BOOTSTRAP_STREAM_BASE + metric * rcfg.bootstrap_resamples as u64 + b,
        );
        let mut sum = 0.0;
        for _ in 0..n {
            sum += values[rng.next_below(n as u64) as usize];
        }
        resampled.push(sum / n as f64);
    }
    resampled.sort_by(f64::total_cmp);
    EstimateCi {
        mean,
        lo: percentile(&resampled, 0.025),
        hi: percentile(&resampled, 0.975),
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}
