//! Run metadata: every command records how it was invoked so outputs can
//! be reproduced byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct RunMetadata {
    pub command_line: String,
    pub seed: u64,
    pub rng_algorithm: &'static str,
    /// SHA-256 of the model file consumed or produced, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_hash: Option<String>,
    /// SHA-256 over the resolved configuration key-value pairs.
    pub config_digest: String,
    pub wall_ms: u128,
    /// Every resolved option, defaults included.
    pub config: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

pub fn config_digest(config: &BTreeMap<String, String>) -> String {
    let mut joined = String::new();
    for (k, v) in config {
        joined.push_str(k);
        joined.push('=');
        joined.push_str(v);
        joined.push('\n');
    }
    sha256_hex(joined.as_bytes())
}

/// Writes `run.json` into the output directory.
pub fn write_run_metadata(dir: &Path, meta: &RunMetadata) -> Result<()> {
    let path = dir.join("run.json");
    let json = serde_json::to_string_pretty(meta)?;
    fs::write(&path, json).with_context(|| format!("writing {}", path.display()))
}
