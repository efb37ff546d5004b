//! Model checkpoints: `model.bin` holds the weights in the binary parameter
//! format, `model.json` holds the config and normalization statistics.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::model::VectorFieldModel;
use crate::error::{Error, Result};
use crate::motion::{Normalizer, PoseLayout};
use crate::numerics::checkpoint::{read_params, write_params};

pub const WEIGHTS_FILE: &str = "model.bin";
pub const SIDECAR_FILE: &str = "model.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    config: ModelConfig,
    joints: usize,
    normalizer: Normalizer,
}

/// A trained model together with what is needed to map motions in and out of model space.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: VectorFieldModel,
    pub layout: PoseLayout,
    pub normalizer: Normalizer,
}

impl Checkpoint {
    pub fn new(model: VectorFieldModel, layout: PoseLayout, normalizer: Normalizer) -> Result<Self> {
        if layout.dim() != model.config().feature_dim || normalizer.dim() != layout.dim() {
            return Err(Error::InvalidConfig(format!(
                "layout dim {}, model feature_dim {}, normalizer dim {} disagree",
                layout.dim(),
                model.config().feature_dim,
                normalizer.dim()
            )));
        }
        Ok(Self {
            model,
            layout,
            normalizer,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_params(&dir.join(WEIGHTS_FILE), self.model.params())?;
        let sidecar = Sidecar {
            config: self.model.config().clone(),
            joints: self.layout.joints(),
            normalizer: self.normalizer.clone(),
        };
        let path = dir.join(SIDECAR_FILE);
        fs::write(&path, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(SIDECAR_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Format {
            kind: "checkpoint sidecar",
            path: path.clone(),
            detail: e.to_string(),
        })?;
        let params = read_params(&dir.join(WEIGHTS_FILE))?;
        let model = VectorFieldModel::from_parts(sidecar.config, params)?;
        Self::new(model, PoseLayout::new(sidecar.joints)?, sidecar.normalizer)
    }
}
