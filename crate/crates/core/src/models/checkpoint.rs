use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::ModelSpec;
use super::state::ModelState;
use crate::dataset::StandardizationParams;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to reproduce a forecast: structure, weights and the
/// scaling of the window they were trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub spec: ModelSpec,
    pub state: ModelState,
    pub standardization: StandardizationParams,
}

impl Checkpoint {
    pub fn new(spec: ModelSpec, state: ModelState, standardization: StandardizationParams) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            spec,
            state,
            standardization,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(s)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                c.version
            )));
        }
        c.state.validate(&c.spec)?;
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
