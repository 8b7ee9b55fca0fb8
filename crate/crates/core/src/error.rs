//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by configuration validation, the solver, and the simulator.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A configuration value violates its documented constraints.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// An operation was called with arguments outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A state/layer query does not belong to the enumerated state space.
    #[error("unknown state: layer {layer}, total_n {total_n}, total_x {total_x}")]
    UnknownState {
        layer: u32,
        total_n: u32,
        total_x: u32,
    },

    /// State enumeration would exceed the configured cap.
    #[error("state space too large: {states} states exceeds cap {cap}")]
    ResourceCap { states: u128, cap: u128 },

    /// A numerical procedure failed to converge or produced an inconsistent
    /// result (quadrature non-convergence, convexity violation).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
