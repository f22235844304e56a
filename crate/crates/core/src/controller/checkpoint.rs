//! Controller checkpoints.
//!
//! A checkpoint is a JSON document:
//!
//! ```json
//! {
//!   "format": "graphnas-controller",
//!   "version": 1,
//!   "config": { "state_embedding_dim": 16, ... },
//!   "tensors": [ { "name": "head/3/weight", "shape": [2, 64], "values": [...] }, ... ]
//! }
//! ```
//!
//! Tensor names are `state_embedding`, `action_embedding` (last row is the
//! start token), `aggregator/{weight,bias}`, `lstm/{input,forget,candidate,output}/{weight,bias}`
//! and `head/<vertex id>/{weight,bias}`. Values are row-major and written in
//! shortest round-trip form, so loading reproduces every bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Controller, ControllerConfig};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "graphnas-controller";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ControllerConfig,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub(super) fn from_controller(c: &Controller) -> Self {
        let tensors = c
            .params()
            .iter()
            .map(|(_, p)| NamedTensor {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                values: p.value.values().to_vec(),
            })
            .collect();
        Self { format: CHECKPOINT_FORMAT.into(), version: CHECKPOINT_VERSION, config: *c.config(), tensors }
    }

    pub(super) fn check_header(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unexpected format `{}`", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", self.version)));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
