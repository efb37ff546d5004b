//! Training-free editing by sampling-trajectory rewriting.

mod mask;
mod rewrite;

pub use mask::{build_mask, default_upper_joints, EditMask, EditTask, MaskParams};
pub use rewrite::{rewrite_sample, EditConfig};
