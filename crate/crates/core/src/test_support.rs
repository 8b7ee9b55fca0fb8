//! Canonical configurations shared by unit, integration, and acceptance
//! tests.

use crate::config::{ProtocolConfig, QAtom, TestProcessKind};

/// The antibiotic-development setting: four trials of up to 200 patients,
/// κ = 0.05 against a baseline efficacy of 0.5, uniform prior, point-mass Q,
/// and the published cost and benefit figures (currency in millions).
pub fn fiducial_config() -> ProtocolConfig {
    ProtocolConfig {
        horizon_t: 3,
        n_max: 200,
        theta_baseline: 0.5,
        kappa: 0.05,
        cost_fixed: 48.9,
        cost_per_sample: 0.066,
        rho_agent: 240.0,
        rho_social: 2000.0,
        prior_alpha0: 1.0,
        prior_beta0: 1.0,
        epsilon_max: 0.9,
        principal_belief_q: vec![QAtom {
            alpha0: 1.0,
            beta0: 1.0,
            weight: 1.0,
        }],
        test_process_kind: TestProcessKind::Exponential,
        mixture: Default::default(),
        cost_form: "linear".into(),
    }
    .validate()
    .unwrap()
}

/// A small, fast variant for structural tests. Callers mutate fields and
/// re-validate as needed.
pub fn small_config(horizon_t: u32, n_max: u32) -> ProtocolConfig {
    ProtocolConfig {
        horizon_t,
        n_max,
        theta_baseline: 0.5,
        kappa: 0.5,
        cost_fixed: 0.5,
        cost_per_sample: 0.1,
        rho_agent: 10.0,
        rho_social: 50.0,
        prior_alpha0: 1.0,
        prior_beta0: 1.0,
        epsilon_max: 0.9,
        principal_belief_q: vec![QAtom {
            alpha0: 1.0,
            beta0: 1.0,
            weight: 1.0,
        }],
        test_process_kind: TestProcessKind::Exponential,
        mixture: Default::default(),
        cost_form: "linear".into(),
    }
}
