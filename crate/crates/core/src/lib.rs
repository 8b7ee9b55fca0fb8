//! Planner, subsidy optimizer, and Monte Carlo validator for sequential
//! approval processes.
//!
//! An agent runs randomized trials one at a time, paying a linear cost per
//! trial, while a principal aggregates the outcomes through a test
//! supermartingale and approves as soon as the accumulated evidence passes
//! `1/κ`. The principal reimburses a fraction ε of the accumulated cost upon
//! approval. This crate computes:
//!
//! - the agent's optimal trial-size policy for any subsidy, by backward
//!   induction over the Beta-Binomial belief MDP ([`mdp`]);
//! - the subsidy maximizing the principal's anticipated social utility, by
//!   divide-and-conquer over the piecewise-linear agent value ([`subsidy`]);
//! - Monte Carlo estimates of realized utilities, approval and opt-out
//!   probabilities under a hidden true efficacy, with bootstrap confidence
//!   intervals ([`sim`]).
//!
//! All test-process quantities live in natural-log space; approval checks
//! compare `log f` against `log(1/κ)` exactly, with no tolerance slack.

pub mod config;
pub mod error;
pub mod mdp;
pub mod mixture;
pub mod model;
pub mod sim;
pub mod subsidy;

#[doc(hidden)]
pub mod test_support;

pub use config::{MixtureSpec, ProtocolConfig, QAtom, TestProcessKind};
pub use error::{Error, Result};
pub use mdp::{
    closed_form_state_count, enumerate_states, enumerate_states_with_cap, solve, solve_with_space,
    RootSummary, SolvedPolicy, StateSpace,
};
pub use model::{
    lambda, log_beta_binomial_pmf, log_e_value, log_f, trial_cost, update_belief, BeliefState,
    TerminalState,
};
pub use subsidy::{evaluate_social_curve, optimize, SubsidySolution, SubsidyVertex};
