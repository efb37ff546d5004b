use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-frame pose feature layout.
///
/// Segments, in order: root angular velocity about Y (1), root velocity in
/// the X-Z plane (2), root height (1), local joint positions `3(j-1)`, joint
/// velocities `3j`, joint rotations in 6D form `6(j-1)`, foot contacts (4).
/// Joint 0 is the root; positions and rotations cover joints `1..j`, while
/// velocities cover every joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PoseLayout {
    joints: usize,
}

pub const ROOT_DIMS: usize = 4;
pub const FOOT_CONTACTS: usize = 4;

/// Feature dimension for `joints` joints.
pub fn feature_dim(joints: usize) -> Result<usize> {
    PoseLayout::new(joints).map(|l| l.dim())
}

impl PoseLayout {
    pub fn new(joints: usize) -> Result<Self> {
        if joints < 2 {
            return Err(Error::InvalidArgument(format!(
                "pose layout needs at least 2 joints, got {joints}"
            )));
        }
        Ok(Self { joints })
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn dim(&self) -> usize {
        ROOT_DIMS + 3 * (self.joints - 1) + 3 * self.joints + 6 * (self.joints - 1) + FOOT_CONTACTS
    }

    pub fn root_angular_velocity(&self) -> Range<usize> {
        0..1
    }

    pub fn root_linear_velocity(&self) -> Range<usize> {
        1..3
    }

    pub fn root_height(&self) -> Range<usize> {
        3..4
    }

    pub fn root(&self) -> Range<usize> {
        0..ROOT_DIMS
    }

    pub fn positions(&self) -> Range<usize> {
        let start = ROOT_DIMS;
        start..start + 3 * (self.joints - 1)
    }

    pub fn velocities(&self) -> Range<usize> {
        let start = self.positions().end;
        start..start + 3 * self.joints
    }

    pub fn rotations(&self) -> Range<usize> {
        let start = self.velocities().end;
        start..start + 6 * (self.joints - 1)
    }

    pub fn foot_contacts(&self) -> Range<usize> {
        let start = self.rotations().end;
        start..start + FOOT_CONTACTS
    }

    /// Position columns of non-root joint `joint` (1-based joint index).
    pub fn joint_position(&self, joint: usize) -> Option<Range<usize>> {
        (1..self.joints).contains(&joint).then(|| {
            let s = self.positions().start + 3 * (joint - 1);
            s..s + 3
        })
    }

    /// Velocity columns of any joint, root included.
    pub fn joint_velocity(&self, joint: usize) -> Option<Range<usize>> {
        (joint < self.joints).then(|| {
            let s = self.velocities().start + 3 * joint;
            s..s + 3
        })
    }

    /// 6D rotation columns of non-root joint `joint`.
    pub fn joint_rotation(&self, joint: usize) -> Option<Range<usize>> {
        (1..self.joints).contains(&joint).then(|| {
            let s = self.rotations().start + 6 * (joint - 1);
            s..s + 6
        })
    }

    /// Every column describing `joint` (position, velocity and rotation where present).
    pub fn joint_columns(&self, joint: usize) -> Vec<usize> {
        [
            self.joint_position(joint),
            self.joint_velocity(joint),
            self.joint_rotation(joint),
        ]
        .into_iter()
        .flatten()
        .flatten()
        .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_dimensions() {
        assert_eq!(feature_dim(22).unwrap(), 263);
        assert_eq!(feature_dim(21).unwrap(), 251);
    }

    #[test]
    fn two_joint_instantiation() {
        assert_eq!(feature_dim(2).unwrap(), 4 + 3 + 6 + 6 + 4);
        assert!(feature_dim(1).is_err());
        assert!(feature_dim(0).is_err());
    }

    #[test]
    fn segments_tile_the_feature_vector() {
        for j in 2..30 {
            let l = PoseLayout::new(j).unwrap();
            let segs = [
                l.root(),
                l.positions(),
                l.velocities(),
                l.rotations(),
                l.foot_contacts(),
            ];
            let mut next = 0;
            for s in segs {
                assert_eq!(s.start, next);
                next = s.end;
            }
            assert_eq!(next, l.dim());
        }
    }

    #[test]
    fn root_has_no_position_or_rotation() {
        let l = PoseLayout::new(3).unwrap();
        assert!(l.joint_position(0).is_none());
        assert!(l.joint_rotation(0).is_none());
        assert_eq!(l.joint_columns(0).len(), 3);
        assert_eq!(l.joint_columns(2).len(), 12);
        assert!(l.joint_velocity(3).is_none());
    }
}
