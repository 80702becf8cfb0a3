//! Run manifests: the resolved configuration, seeds and output digests.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::Config;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub train_seed: u64,
    pub inputs: Vec<OutputDigest>,
    pub outputs: Vec<OutputDigest>,
    pub config: String,
}

pub fn digest_file(path: &Path) -> Result<OutputDigest> {
    let bytes = std::fs::read(path)?;
    Ok(OutputDigest {
        file: path
            .file_name()
            .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl Manifest {
    pub fn new(command: &str, cfg: &Config, inputs: &[&Path], outputs: &[&Path]) -> Result<Self> {
        Ok(Self {
            command: command.into(),
            seed: cfg.harness.seed,
            train_seed: cfg.train.seed,
            inputs: inputs.iter().map(|p| digest_file(p)).collect::<Result<_>>()?,
            outputs: outputs.iter().map(|p| digest_file(p)).collect::<Result<_>>()?,
            config: cfg.to_toml()?,
        })
    }

    /// Writes `manifest-<command>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<std::path::PathBuf> {
        let path = dir.join(format!("manifest-{}.json", self.command));
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}
