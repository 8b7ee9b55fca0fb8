//! Config-file loading and `--set` overrides.
//!
//! The config file is JSON with the field names of [`ProtocolConfig`];
//! currency values are in millions. Overrides take `key=value` pairs for the
//! scalar fields. Overriding the agent prior also moves a point-mass
//! principal belief that sat on the old prior, matching how the alternative
//! settings are specified.

use std::path::Path;

use approval_core::{Error, ProtocolConfig, Result, TestProcessKind};

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ProtocolConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg: ProtocolConfig = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("cannot parse {}: {e}", path.display())))?;
    for entry in overrides {
        apply_override(&mut cfg, entry)?;
    }
    cfg.validate()
}

pub fn apply_override(cfg: &mut ProtocolConfig, entry: &str) -> Result<()> {
    let (key, value) = entry
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(format!("override {entry:?} is not key=value")))?;
    let parse_f64 = || -> Result<f64> {
        value
            .parse::<f64>()
            .map_err(|_| Error::InvalidConfig(format!("override {key}: bad number {value:?}")))
    };
    let parse_u32 = || -> Result<u32> {
        value
            .parse::<u32>()
            .map_err(|_| Error::InvalidConfig(format!("override {key}: bad integer {value:?}")))
    };
    match key {
        "horizon_t" => cfg.horizon_t = parse_u32()?,
        "n_max" => cfg.n_max = parse_u32()?,
        "theta_baseline" => cfg.theta_baseline = parse_f64()?,
        "kappa" => cfg.kappa = parse_f64()?,
        "cost_fixed" => cfg.cost_fixed = parse_f64()?,
        "cost_per_sample" => cfg.cost_per_sample = parse_f64()?,
        "rho_agent" => cfg.rho_agent = parse_f64()?,
        "rho_social" => cfg.rho_social = parse_f64()?,
        "epsilon_max" => cfg.epsilon_max = parse_f64()?,
        "prior_alpha0" => set_prior(cfg, parse_f64()?, cfg.prior_beta0),
        "prior_beta0" => set_prior(cfg, cfg.prior_alpha0, parse_f64()?),
        "quadrature_nodes" => cfg.mixture.quadrature_nodes = parse_u32()?,
        "test_process_kind" => {
            cfg.test_process_kind = match value {
                "exponential" => TestProcessKind::Exponential,
                "uniform-mixture" => TestProcessKind::UniformMixture,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown test_process_kind {other:?}"
                    )))
                }
            }
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown override field {other:?}"
            )))
        }
    }
    Ok(())
}

fn set_prior(cfg: &mut ProtocolConfig, alpha0: f64, beta0: f64) {
    let was_point_mass_on_prior = cfg.principal_belief_q.len() == 1
        && (cfg.principal_belief_q[0].alpha0 - cfg.prior_alpha0).abs() <= 1e-12
        && (cfg.principal_belief_q[0].beta0 - cfg.prior_beta0).abs() <= 1e-12;
    cfg.prior_alpha0 = alpha0;
    cfg.prior_beta0 = beta0;
    if was_point_mass_on_prior {
        cfg.principal_belief_q = ProtocolConfig::point_mass_q(alpha0, beta0);
    }
}
