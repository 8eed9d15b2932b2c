//! Run manifest embedded in every output file.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Scale preset for TDSE runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Desk,
    Paper,
}

impl std::str::FromStr for Preset {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(crate::Error::config(format!("unknown preset '{other}' (desk|paper)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_path: String,
    /// SHA-256 of the raw configuration bytes plus any input files.
    pub inputs_sha256: String,
    pub output_dir: String,
    pub seed: u64,
    pub preset: Preset,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        config_path: &str,
        inputs: &[&[u8]],
        output_dir: &str,
        seed: u64,
        preset: Preset,
    ) -> Self {
        Self {
            tool: "rabbitt".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config_path: config_path.into(),
            inputs_sha256: hash_inputs(inputs),
            output_dir: output_dir.into(),
            seed,
            preset,
        }
    }
}

pub fn hash_inputs(inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for chunk in inputs {
        h.update((chunk.len() as u64).to_le_bytes());
        h.update(chunk);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
