//! Solved policies: per-state optimal actions plus the decomposed value
//! surfaces `V⁰`, `A`, and the approval / opt-out probabilities.

use std::sync::Arc;

use crate::config::ProtocolConfig;
use crate::error::{Error, Result};
use crate::mdp::solve::{A, P_APP, P_OPT, V0};
use crate::mdp::space::StateSpace;
use crate::model::BeliefState;

/// Value tables of one belief-MDP solve (one atom of Q).
#[derive(Debug, Clone)]
pub struct AtomTables {
    pub alpha0: f64,
    pub beta0: f64,
    pub weight: f64,
    /// `[layer][state] = [V⁰, A, p_approve, p_optout]` for layers 0..=T.
    pub(crate) values: Vec<Vec<[f64; 4]>>,
    /// `[layer][state]` optimal action; 0 is opt-out.
    pub(crate) actions: Vec<Vec<u16>>,
}

impl AtomTables {
    pub fn action(&self, layer: usize, idx: usize) -> u16 {
        self.actions[layer][idx]
    }

    pub fn v0(&self, layer: usize, idx: usize) -> f64 {
        self.values[layer][idx][V0]
    }

    pub fn a_cost(&self, layer: usize, idx: usize) -> f64 {
        self.values[layer][idx][A]
    }

    pub fn p_approve(&self, layer: usize, idx: usize) -> f64 {
        self.values[layer][idx][P_APP]
    }

    pub fn p_optout(&self, layer: usize, idx: usize) -> f64 {
        self.values[layer][idx][P_OPT]
    }
}

/// Q-averaged root quantities of a solved policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSummary {
    pub v0: f64,
    pub a_cost: f64,
    pub p_approve: f64,
    pub p_optout: f64,
    /// Root action of the agent-prior atom.
    pub first_action: u16,
}

/// The agent's optimal policy for one subsidy level, with the linear value
/// decomposition `V^ε = V⁰ + ε·A` and the terminal-outcome probabilities.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct SolvedPolicy {
    epsilon: f64,
    epsilon_max: f64,
    space: Arc<StateSpace>,
    atoms: Vec<AtomTables>,
    agent_atom: usize,
}

impl SolvedPolicy {
    pub(crate) fn new(
        epsilon: f64,
        epsilon_max: f64,
        space: Arc<StateSpace>,
        atoms: Vec<AtomTables>,
        agent_atom: usize,
    ) -> Self {
        Self {
            epsilon,
            epsilon_max,
            space,
            atoms,
            agent_atom,
        }
    }

    /// Subsidy this policy was solved for.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The same action policy with payoffs accounted at a different subsidy.
    ///
    /// At a partition vertex two policies are value-tied and a fresh solve
    /// there can return either; the subsidy search instead hands out the
    /// right-interval policy (solved strictly inside its interval) and this
    /// method rebases it to the vertex subsidy for simulation.
    pub fn at_subsidy(&self, epsilon: f64) -> Result<Self> {
        if !(0.0..=self.epsilon_max).contains(&epsilon) {
            return Err(Error::Domain(format!(
                "subsidy {epsilon} outside [0, {}]",
                self.epsilon_max
            )));
        }
        let mut policy = self.clone();
        policy.epsilon = epsilon;
        Ok(policy)
    }

    pub fn space(&self) -> &Arc<StateSpace> {
        &self.space
    }

    pub fn atoms(&self) -> &[AtomTables] {
        &self.atoms
    }

    pub fn atom(&self, idx: usize) -> &AtomTables {
        &self.atoms[idx]
    }

    /// Index of the table matching the agent's own prior.
    pub fn agent_atom(&self) -> usize {
        self.agent_atom
    }

    /// Optimal action at `(layer, N, X)` under the agent's own prior.
    pub fn action(&self, l: u32, total_n: u32, total_x: u32) -> Result<u16> {
        if l > self.space.horizon_t {
            return Err(Error::UnknownState {
                layer: l,
                total_n,
                total_x,
            });
        }
        let idx = self.space.checked_index(l, total_n, total_x)?;
        Ok(self.atoms[self.agent_atom].actions[l as usize][idx])
    }

    /// Value of this fixed policy at a different subsidy, exact by the
    /// linearity of the decomposition: `V⁰ + ε_query·A`.
    ///
    /// States in layer T+1 and absorbing states carry zero value.
    pub fn value_at(&self, state: &BeliefState, epsilon_query: f64) -> Result<f64> {
        self.value_at_indices(state.t, state.total_n, state.total_x, epsilon_query)
    }

    /// As [`value_at`](Self::value_at), addressing the state by indices.
    pub fn value_at_indices(
        &self,
        l: u32,
        total_n: u32,
        total_x: u32,
        epsilon_query: f64,
    ) -> Result<f64> {
        if !(0.0..=self.epsilon_max).contains(&epsilon_query) {
            return Err(Error::Domain(format!(
                "subsidy {epsilon_query} outside [0, {}]",
                self.epsilon_max
            )));
        }
        let idx = self.space.checked_index(l, total_n, total_x)?;
        if l > self.space.horizon_t {
            return Ok(0.0);
        }
        let cell = &self.atoms[self.agent_atom].values[l as usize][idx];
        Ok(cell[V0] + epsilon_query * cell[A])
    }

    /// Q-weighted root summary.
    pub fn root_avg(&self) -> RootSummary {
        let mut v0 = 0.0;
        let mut a_cost = 0.0;
        let mut p_approve = 0.0;
        let mut p_optout = 0.0;
        for atom in &self.atoms {
            let cell = &atom.values[0][0];
            v0 += atom.weight * cell[V0];
            a_cost += atom.weight * cell[A];
            p_approve += atom.weight * cell[P_APP];
            p_optout += atom.weight * cell[P_OPT];
        }
        RootSummary {
            v0,
            a_cost,
            p_approve,
            p_optout,
            first_action: self.atoms[self.agent_atom].actions[0][0],
        }
    }

    /// Anticipated agent utility `Ū^A(π; ε)`: the Q-average of the root
    /// values of this fixed policy evaluated at subsidy `epsilon`.
    pub fn anticipated_agent_utility(&self, epsilon: f64) -> f64 {
        let root = self.root_avg();
        root.v0 + epsilon * root.a_cost
    }

    /// Anticipated social utility `Ū^S(ε; π) = ρ^S·E_Q[P(approval)] −
    /// ε·E_Q[A]` for this fixed policy.
    pub fn anticipated_social_utility(&self, cfg: &ProtocolConfig, epsilon: f64) -> f64 {
        let root = self.root_avg();
        cfg.rho_social * root.p_approve - epsilon * root.a_cost
    }
}
