//! Pose-feature layout, synthetic datasets and motion files.

mod io;
mod layout;
mod normalize;
mod sequence;
mod synthetic;

pub use io::{
    decode_motion, encode_motion, read_motion, read_motion_dir, write_motion, write_motion_dir, MotionHeader,
    MOTION_EXTENSION,
};
pub use layout::{feature_dim, PoseLayout};
pub use normalize::Normalizer;
pub use sequence::MotionSequence;
pub use synthetic::{gen_synthetic_dataset, DatasetFamily, SyntheticDatasetSpec};

use crate::error::{Error, Result};
use crate::numerics::DenseArray;

/// Stacks equally sized motions into a `[n, frames, D]` array.
pub fn stack_motions(motions: &[MotionSequence]) -> Result<DenseArray> {
    let values: Vec<DenseArray> = motions.iter().map(|m| m.values().clone()).collect();
    if values.is_empty() {
        return Err(Error::InvalidArgument("no motions to stack".into()));
    }
    DenseArray::stack(&values)
}
