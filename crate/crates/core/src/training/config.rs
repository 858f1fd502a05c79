use serde::{Deserialize, Serialize};

use crate::dataset::StandardizeConfig;
use crate::error::{Error, Result};

/// Plateau scheduler constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerConfig {
    pub factor: f64,
    pub patience: usize,
    /// Relative improvement needed to reset the patience counter.
    pub threshold: f64,
    pub min_lr: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            factor: 0.5,
            patience: 5,
            threshold: 1e-4,
            min_lr: 1e-7,
        }
    }
}

/// Adam constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Use the moments without bias correction.
    pub raw_adam: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            raw_adam: false,
        }
    }
}

/// Settings of one training phase (the initial window or the daily updates).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub l1: f64,
    pub epochs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr_init: f64,
    pub lr_all: f64,
    pub weight_decay_init: f64,
    pub weight_decay_all: f64,
    pub l1_init: f64,
    pub l1_all: f64,
    pub epochs_init: usize,
    pub epochs_all: usize,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub adam: AdamConfig,
    pub scheduler: SchedulerConfig,
    /// Re-express warm-started weights when the window's scaling changes, so
    /// the carried model keeps its forecast in EUR/MWh.
    pub rescale_warm_start: bool,
    pub standardize: StandardizeConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_init: 1e-3,
            lr_all: 1e-3,
            weight_decay_init: 0.0,
            weight_decay_all: 0.0,
            l1_init: 0.0,
            l1_all: 0.0,
            epochs_init: 50,
            epochs_all: 10,
            batch_size: 32,
            clip_norm: 5.0,
            adam: AdamConfig::default(),
            scheduler: SchedulerConfig::default(),
            rescale_warm_start: true,
            standardize: StandardizeConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn initial(&self) -> PhaseConfig {
        PhaseConfig {
            lr: self.lr_init,
            weight_decay: self.weight_decay_init,
            l1: self.l1_init,
            epochs: self.epochs_init,
        }
    }

    pub fn update(&self) -> PhaseConfig {
        PhaseConfig {
            lr: self.lr_all,
            weight_decay: self.weight_decay_all,
            l1: self.l1_all,
            epochs: self.epochs_all,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("lr_init", self.lr_init),
            ("lr_all", self.lr_all),
            ("weight_decay_init", self.weight_decay_init),
            ("weight_decay_all", self.weight_decay_all),
            ("l1_init", self.l1_init),
            ("l1_all", self.l1_all),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::Config(format!("clip_norm must be > 0, got {}", self.clip_norm)));
        }
        Ok(())
    }
}
