//! Run manifests: enough metadata next to every artifact to reproduce it.

use std::path::Path;
use std::time::Instant;

use approval_core::ProtocolConfig;
use serde::Serialize;

/// Written alongside every output artifact. Identical config, command,
/// overrides, and seed reproduce byte-identical data files; only the
/// wall-clock field varies between runs.
/// Version of the CSV/JSON artifact schemas; bumped on any column or field
/// change so golden files stay meaningful.
pub const SCHEMA_VERSION: &str = "approval.artifacts.v1";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: String,
    pub config_hash: String,
    pub command: String,
    pub overrides: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_clock_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mdp_solve_count: Option<u64>,
}

impl RunManifest {
    pub fn new(cfg: &ProtocolConfig, command: &str, overrides: &[String]) -> (Self, Instant) {
        let manifest = Self {
            schema_version: SCHEMA_VERSION.to_owned(),
            config_hash: config_hash(cfg),
            command: command.to_owned(),
            overrides: overrides.to_vec(),
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_clock_secs: 0.0,
            mdp_solve_count: None,
        };
        (manifest, Instant::now())
    }

    pub fn finish(mut self, started: Instant, dir: &Path) -> std::io::Result<()> {
        self.wall_clock_secs = started.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), text + "\n")
    }
}

/// FNV-1a 64 over the canonical JSON form of the validated config.
pub fn config_hash(cfg: &ProtocolConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in canonical.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approval_core::test_support::fiducial_config;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&fiducial_config());
        let b = config_hash(&fiducial_config());
        assert_eq!(a, b);
        let mut cfg = fiducial_config();
        cfg.rho_agent = 5000.0;
        assert_ne!(a, config_hash(&cfg));
    }
}
