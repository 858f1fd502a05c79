use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use dayahead_core::dataset::{CsvSchema, FeatureConfig, FundamentalsConfig};
use dayahead_core::hpo::{HyperParams, SamplerKind, TpeConfig};
use dayahead_core::models::ArchType;
use dayahead_core::training::TrainConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything a command needs besides its input files. Read from TOML;
/// command-line flags override the file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub arch: ArchType,
    pub data: DataConfig,
    pub split: SplitConfig,
    /// Optimizer settings outside the search space.
    pub train: TrainConfig,
    /// Hyperparameters used by `backtest` when no params file is given.
    pub params: HyperParams,
    pub hpo: HpoConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub schema: CsvSchema,
    pub fundamentals: FundamentalsConfig,
    pub features: FeatureConfig,
}

/// Trailing validation and test blocks, in forecast days.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub validation_days: usize,
    pub test_days: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpoConfig {
    pub budget: usize,
    pub sampler: SamplerKind,
    pub tpe: TpeConfig,
    /// Trials proposed per history snapshot.
    pub parallel: usize,
    /// Dimensions pinned to a single value.
    pub fix: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            arch: ArchType::LemKfRnn,
            data: DataConfig::default(),
            split: SplitConfig::default(),
            train: TrainConfig::default(),
            params: HyperParams::default(),
            hpo: HpoConfig::default(),
        }
    }
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            validation_days: 365,
            test_days: 365,
        }
    }
}

impl Default for HpoConfig {
    fn default() -> Self {
        Self {
            budget: 50,
            sampler: SamplerKind::Tpe,
            tpe: TpeConfig::default(),
            parallel: 4,
            fix: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex_digest(&json)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
