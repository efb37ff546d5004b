use super::layout::PoseLayout;
use crate::error::{Error, Result};
use crate::numerics::DenseArray;

/// A motion clip: `frames × layout.dim()` pose features plus an optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    layout: PoseLayout,
    values: DenseArray,
    condition: Option<usize>,
}

impl MotionSequence {
    /// Wraps a `[frames, D]` array. Zero frames are representable but fail [`validate`](Self::validate).
    pub fn new(layout: PoseLayout, values: DenseArray, condition: Option<usize>) -> Result<Self> {
        if values.rank() != 2 {
            return Err(Error::shape(
                "MotionSequence::new",
                format!("expected [frames, dim], got {:?}", values.shape()),
            ));
        }
        if values.shape()[1] != layout.dim() {
            return Err(Error::DimensionMismatch {
                joints: layout.joints(),
                expected: layout.dim(),
                found: values.shape()[1],
            });
        }
        Ok(Self {
            layout,
            values,
            condition,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames() == 0 {
            return Err(Error::InvalidArgument("motion has zero frames".into()));
        }
        if !self.values.is_finite() {
            return Err(Error::InvalidArgument("motion contains non-finite values".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> PoseLayout {
        self.layout
    }

    pub fn frames(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn values(&self) -> &DenseArray {
        &self.values
    }

    pub fn into_values(self) -> DenseArray {
        self.values
    }

    pub fn condition(&self) -> Option<usize> {
        self.condition
    }

    pub fn with_condition(mut self, condition: Option<usize>) -> Self {
        self.condition = condition;
        self
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// Positions of non-root joints at frame `i`, one `[x, y, z]` per joint.
    pub fn joint_positions(&self, i: usize) -> Vec<[f64; 3]> {
        let row = self.frame(i);
        row[self.layout.positions()]
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect()
    }
}
