//! Monte Carlo rollouts of the true approval process, reproducible RNG
//! substreams, and exact-distribution samplers.

pub mod rng;
pub mod rollout;
pub mod sample;

pub use rng::SplitMix64;
pub use rollout::{
    baseline_optimal_subsidy, baseline_single_trial, false_positive_rate, simulate,
    simulate_prior_mixture, single_trial_config, BaselineKind, BaselineOutcome, BatchSummary,
    EstimateCi, RolloutBatch, RolloutConfig, RolloutRecord, TerminalOutcome,
};
