//! Protocol configuration: every fixed parameter of one approval-process
//! instance, with validation of the documented invariants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum baseline efficacy accepted by validation. Below this, the e-value
/// shift `log(1 + θᵇ(e−1))` underflows toward zero and the test process
/// degenerates.
pub const MIN_THETA_BASELINE: f64 = 1e-6;

/// Largest per-trial sample size the solver accepts.
pub const MAX_N_MAX: u32 = 60_000;

/// Which test process the principal runs on the revealed outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestProcessKind {
    /// Multiplicative product of the exponentiated-statistic e-values,
    /// `log M = X − N·λ` with `λ = log(1 + θᵇ(e−1))`.
    #[default]
    Exponential,
    /// Mixture supermartingale with a uniform mixing density on `(θᵇ, 1)`.
    UniformMixture,
}

/// One atom of the principal's belief over the agent's prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QAtom {
    pub alpha0: f64,
    pub beta0: f64,
    pub weight: f64,
}

/// Mixture-process settings (only read when
/// `test_process_kind = uniform-mixture`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    /// Number of Gauss–Legendre nodes on `(θᵇ, 1)`.
    pub quadrature_nodes: u32,
    /// Relative tolerance checked by node doubling.
    pub rel_tolerance: f64,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        Self {
            quadrature_nodes: 200,
            rel_tolerance: 1e-10,
        }
    }
}

/// All fixed parameters of one approval-process instance.
///
/// Currency fields (`cost_fixed`, `cost_per_sample`, `rho_agent`,
/// `rho_social`) are in millions, matching the source data. The cost of a
/// trial of size `n ≥ 1` is `cost_fixed + cost_per_sample · n`; opting out is
/// free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Maximum time index T; the agent acts at steps 0..=T.
    pub horizon_t: u32,
    /// Maximum per-trial sample size.
    pub n_max: u32,
    /// Baseline efficacy θᵇ the product must exceed.
    pub theta_baseline: f64,
    /// False-positive tolerance κ; approval requires `M ≥ 1/κ`.
    pub kappa: f64,
    /// Fixed cost per trial, c₀.
    pub cost_fixed: f64,
    /// Per-sample cost, c₁.
    pub cost_per_sample: f64,
    /// Agent benefit upon approval, ρᴬ.
    pub rho_agent: f64,
    /// Social benefit upon approval, ρˢ.
    pub rho_social: f64,
    /// Agent prior Beta(α₀, β₀).
    pub prior_alpha0: f64,
    pub prior_beta0: f64,
    /// Largest subsidy fraction the principal may commit to.
    pub epsilon_max: f64,
    /// Principal's belief Q over the agent's prior, as weighted atoms.
    pub principal_belief_q: Vec<QAtom>,
    /// Which test process drives approval.
    #[serde(default)]
    pub test_process_kind: TestProcessKind,
    /// Mixture-process settings.
    #[serde(default)]
    pub mixture: MixtureSpec,
    /// Cost-function form; only `"linear"` is supported. The solver's state
    /// bijection derives the accumulated cost from `(t, N)` and is unsound
    /// for any other form.
    #[serde(default = "default_cost_form")]
    pub cost_form: String,
}

fn default_cost_form() -> String {
    "linear".to_owned()
}

impl ProtocolConfig {
    /// Checks every documented invariant, returning the config on success.
    pub fn validate(self) -> Result<Self> {
        let err = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, v) in [
            ("theta_baseline", self.theta_baseline),
            ("kappa", self.kappa),
            ("cost_fixed", self.cost_fixed),
            ("cost_per_sample", self.cost_per_sample),
            ("rho_agent", self.rho_agent),
            ("rho_social", self.rho_social),
            ("prior_alpha0", self.prior_alpha0),
            ("prior_beta0", self.prior_beta0),
            ("epsilon_max", self.epsilon_max),
        ] {
            if !v.is_finite() {
                return err(format!("{name} must be finite, got {v}"));
            }
        }
        if self.n_max < 1 {
            return err("n_max must be at least 1".into());
        }
        if self.n_max > MAX_N_MAX {
            return err(format!("n_max must be at most {MAX_N_MAX}"));
        }
        if !(self.theta_baseline > 0.0 && self.theta_baseline < 1.0) {
            return err(format!(
                "theta_baseline must lie in (0,1), got {}",
                self.theta_baseline
            ));
        }
        if self.theta_baseline < MIN_THETA_BASELINE {
            return err(format!(
                "theta_baseline must be at least {MIN_THETA_BASELINE}"
            ));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return err(format!("kappa must lie in (0,1), got {}", self.kappa));
        }
        if self.cost_fixed < 0.0 || self.cost_per_sample < 0.0 {
            return err("cost coefficients must be nonnegative".into());
        }
        if self.rho_agent <= 0.0 || self.rho_social <= 0.0 {
            return err("approval benefits must be positive".into());
        }
        if self.prior_alpha0 <= 0.0 || self.prior_beta0 <= 0.0 {
            return err("prior parameters must be positive".into());
        }
        if !(self.epsilon_max > 0.0 && self.epsilon_max <= 1.0) {
            return err(format!(
                "epsilon_max must lie in (0,1], got {}",
                self.epsilon_max
            ));
        }
        if self.cost_form != "linear" {
            return err(format!(
                "cost_form must be \"linear\", got {:?}",
                self.cost_form
            ));
        }
        if self.principal_belief_q.is_empty() {
            return err("principal_belief_q must have at least one atom".into());
        }
        let mut total_weight = 0.0;
        for atom in &self.principal_belief_q {
            if !(atom.alpha0.is_finite() && atom.beta0.is_finite() && atom.weight.is_finite()) {
                return err("principal_belief_q entries must be finite".into());
            }
            if atom.alpha0 <= 0.0 || atom.beta0 <= 0.0 {
                return err("principal_belief_q priors must be positive".into());
            }
            if atom.weight < 0.0 {
                return err("principal_belief_q weights must be nonnegative".into());
            }
            total_weight += atom.weight;
        }
        if (total_weight - 1.0).abs() > 1e-12 {
            return err(format!(
                "principal_belief_q weights must sum to 1, got {total_weight}"
            ));
        }
        if self.test_process_kind == TestProcessKind::UniformMixture
            && self.mixture.quadrature_nodes < 16
        {
            return err("mixture quadrature_nodes must be at least 16".into());
        }
        let lambda = crate::model::lambda(self.theta_baseline);
        if !(lambda > 0.0 && lambda < 1.0) {
            return err(format!("derived shift λ = {lambda} is outside (0,1)"));
        }
        Ok(self)
    }

    /// Natural log of the approval threshold, `log(1/κ)`.
    pub fn log_inv_kappa(&self) -> f64 {
        -self.kappa.ln()
    }

    /// Point-mass Q at the agent's own prior.
    pub fn point_mass_q(alpha0: f64, beta0: f64) -> Vec<QAtom> {
        vec![QAtom {
            alpha0,
            beta0,
            weight: 1.0,
        }]
    }
}
