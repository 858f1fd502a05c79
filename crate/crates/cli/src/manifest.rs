use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::{hex_digest, RunConfig};

/// Provenance of one command run: what went in and the hash of every file
/// that came out.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub seed: u64,
    pub arch: String,
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(hex_digest(&bytes))
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// Writes `manifest_<command>.json` beside the outputs and returns its path.
pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    cfg: &RunConfig,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
) -> Result<PathBuf> {
    let mut m = Manifest {
        command: command.to_string(),
        config_hash: cfg.hash(),
        inputs: BTreeMap::new(),
        outputs: BTreeMap::new(),
        seed: cfg.seed,
        arch: cfg.arch.as_str().to_string(),
    };
    for p in inputs {
        m.inputs.insert(file_name(p), file_digest(p)?);
    }
    for p in outputs {
        m.outputs.insert(file_name(p), file_digest(p)?);
    }
    let path = out_dir.join(format!("manifest_{command}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(path)
}
