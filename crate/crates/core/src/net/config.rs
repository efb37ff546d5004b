use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Transformer,
    Mlp,
}

/// Shape and size of the vector-field network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Per-frame feature dimension `D`.
    pub feature_dim: usize,
    /// Frames per sequence `T`.
    pub frames: usize,
    pub d_model: usize,
    pub layers: usize,
    pub heads: usize,
    pub d_ff: usize,
    /// Number of condition labels `K`; the null embedding is stored as row `K`.
    pub classes: usize,
    pub cond_dim: usize,
    /// Sinusoidal time features fed to the time MLP (even).
    pub time_features: usize,
    pub architecture: Architecture,
}

impl ModelConfig {
    /// Desk-scale transformer defaults: width 64, 2 layers, 4 heads, feed-forward 128.
    pub fn transformer(feature_dim: usize, frames: usize, classes: usize) -> Self {
        Self {
            feature_dim,
            frames,
            d_model: 64,
            layers: 2,
            heads: 4,
            d_ff: 128,
            classes,
            cond_dim: 64,
            time_features: 32,
            architecture: Architecture::Transformer,
        }
    }

    pub fn mlp(feature_dim: usize, frames: usize, classes: usize, width: usize, layers: usize) -> Self {
        Self {
            feature_dim,
            frames,
            d_model: width,
            layers,
            heads: 1,
            d_ff: width,
            classes,
            cond_dim: width,
            time_features: 32,
            architecture: Architecture::Mlp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.feature_dim == 0 || self.frames == 0 {
            return bad("feature_dim and frames must be positive");
        }
        if self.d_model == 0 || self.cond_dim == 0 {
            return bad("d_model and cond_dim must be positive");
        }
        if self.layers == 0 {
            return bad("at least one layer is required");
        }
        if self.time_features == 0 || self.time_features % 2 != 0 {
            return bad("time_features must be a positive even number");
        }
        if self.architecture == Architecture::Transformer {
            if self.heads == 0 || self.d_model % self.heads != 0 {
                return bad("d_model must be divisible by heads");
            }
            if self.d_ff == 0 {
                return bad("d_ff must be positive");
            }
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }
}
