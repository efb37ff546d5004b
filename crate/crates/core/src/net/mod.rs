//! Vector-field network, condition embeddings and model checkpoints.

mod checkpoint;
mod config;
mod model;

pub use checkpoint::{Checkpoint, SIDECAR_FILE, WEIGHTS_FILE};
pub use config::{Architecture, ModelConfig};
pub use model::{time_features, Condition, ConditionEmbedding, VectorFieldModel};
