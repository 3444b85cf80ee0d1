//! Run manifest: config, hashes and provenance for one recipe run.
//!
//! The manifest embeds the full canonical config text, so it alone
//! regenerates every table bit for bit; output hashes make the comparison
//! cheap.

use mazesim_core::rng::RNG_ID;
use mazesim_core::{Result, SimError};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub recipe: String,
    pub config_hash: String,
    /// Canonical config text; parsing it reproduces the run's config.
    pub config_text: String,
    pub rng_id: String,
    pub code_version: String,
    pub wall_clock_s: f64,
    pub outputs: Vec<OutputRecord>,
}

impl Manifest {
    /// Assembles a manifest for a finished run; callers append outputs.
    pub fn new(cfg: &ExperimentConfig, wall_clock_s: f64) -> Manifest {
        Manifest {
            recipe: cfg.recipe.clone(),
            config_hash: cfg.config_hash(),
            config_text: cfg.to_text(),
            rng_id: RNG_ID.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_s,
            outputs: Vec::new(),
        }
    }

    /// The config this manifest was produced from, with its hash verified
    /// against the embedded text.
    pub fn config(&self) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig::from_text(&self.config_text)?;
        let hash = cfg.config_hash();
        if hash != self.config_hash {
            return Err(SimError::Parse(format!(
                "manifest config hash {} does not match embedded config ({hash})",
                self.config_hash
            )));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Manifest> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_config_recovery() {
        let cfg = ExperimentConfig::default();
        let mut m = Manifest::new(&cfg, 1.5);
        m.outputs.push(OutputRecord { file: "a.csv".into(), sha256: "00".into() });
        let back = Manifest::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
        assert_eq!(back.config().unwrap(), cfg);
        assert_eq!(back.rng_id, RNG_ID);
    }

    #[test]
    fn tampered_config_text_is_rejected() {
        let cfg = ExperimentConfig::default();
        let mut m = Manifest::new(&cfg, 0.0);
        m.config_text = m.config_text.replace("seed = 7", "seed = 8");
        assert!(m.config().is_err());
    }
}
