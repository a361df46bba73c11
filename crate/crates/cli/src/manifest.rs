use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use clm_core::io::{to_json_pretty, write_atomic};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const FILE_NAME: &str = "manifest.json";

/// Record of one command run, written last and atomically into its output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub seed_from_entropy: bool,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrapolation: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: &impl Serialize,
        seed: Option<u64>,
        seed_from_entropy: bool,
    ) -> Self {
        Self {
            schema: 1,
            command: command.into(),
            config_hash: config_hash(config),
            seed,
            seed_from_entropy,
            version: env!("CLM_GIT_DESCRIBE").into(),
            wall_time_s: 0.0,
            outputs: Vec::new(),
            extrapolation: None,
            error: None,
        }
    }

    pub fn finish(mut self, dir: &Path, started: Instant, outputs: Vec<String>) -> Result<()> {
        self.wall_time_s = started.elapsed().as_secs_f64();
        self.outputs = outputs;
        write_atomic(&dir.join(FILE_NAME), to_json_pretty(&self).as_bytes())?;
        Ok(())
    }
}

/// Hex SHA-256 of the compact JSON form.
pub fn config_hash(config: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(config).expect("config serialises");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// The given seed, or a fresh one from OS entropy (flagged `true`).
pub fn resolve_seed(seed: Option<u64>) -> (u64, bool) {
    match seed {
        Some(s) => (s, false),
        None => {
            use rand::RngCore;
            (rand::rngs::OsRng.next_u64(), true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"population": 60}));
        assert_eq!(a, config_hash(&serde_json::json!({"population": 60})));
        assert_ne!(a, config_hash(&serde_json::json!({"population": 62})));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn explicit_seed_is_kept() {
        assert_eq!(resolve_seed(Some(7)), (7, false));
        assert!(resolve_seed(None).1);
    }
}
