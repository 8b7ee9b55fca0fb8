//! Belief-MDP state enumeration, backward induction, and solved policies.

pub mod policy;
pub mod solve;
pub mod space;

pub use policy::{AtomTables, RootSummary, SolvedPolicy};
pub use solve::{solve, solve_with_space};
pub use space::{
    closed_form_state_count, enumerate_states, enumerate_states_with_cap, Layer, StateSpace,
    DEFAULT_STATE_CAP,
};
