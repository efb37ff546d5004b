//! Known/unknown masks for the four editing tasks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::PoseLayout;
use crate::numerics::DenseArray;

/// `T × D` boolean mask; `true` marks a known value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditMask {
    frames: usize,
    dim: usize,
    known: Vec<bool>,
}

impl EditMask {
    pub fn new(frames: usize, dim: usize, known: Vec<bool>) -> Result<Self> {
        if known.len() != frames * dim {
            return Err(Error::shape("edit mask", format!("{} entries for {frames}x{dim}", known.len())));
        }
        Ok(Self { frames, dim, known })
    }

    pub fn all(frames: usize, dim: usize, value: bool) -> Self {
        Self {
            frames,
            dim,
            known: vec![value; frames * dim],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.frames, self.dim]
    }

    pub fn is_known(&self, frame: usize, col: usize) -> bool {
        self.known[frame * self.dim + col]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.known
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    /// Frames with at least one unknown value.
    pub fn unknown_frames(&self) -> Vec<usize> {
        (0..self.frames)
            .filter(|&f| (0..self.dim).any(|c| !self.is_known(f, c)))
            .collect()
    }

    /// 1.0 for known entries, 0.0 otherwise.
    pub fn to_array(&self) -> DenseArray {
        let data = self.known.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect();
        DenseArray::new(vec![self.frames, self.dim], data).expect("mask shape matches")
    }

    fn set_frame(&mut self, frame: usize, value: bool) {
        let d = self.dim;
        self.known[frame * d..(frame + 1) * d].fill(value);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditTask {
    InBetween,
    Prediction,
    Interpolation,
    UpperBody,
}

impl std::str::FromStr for EditTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "in_between" => Ok(EditTask::InBetween),
            "prediction" => Ok(EditTask::Prediction),
            "interpolation" => Ok(EditTask::Interpolation),
            "upper_body" => Ok(EditTask::UpperBody),
            _ => Err(Error::InvalidArgument(format!("unknown edit task `{s}`"))),
        }
    }
}

/// Task parameters; only the fields relevant to the chosen task are read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskParams {
    pub frames: usize,
    pub prefix_frames: usize,
    pub suffix_frames: usize,
    pub stride: usize,
    /// Joints whose features are regenerated; `None` picks [`default_upper_joints`].
    pub upper_joints: Option<Vec<usize>>,
}

/// SMPL-style 22-joint skeleton: spine, neck, head, collars, arms.
const SMPL_UPPER: [usize; 13] = [3, 6, 9, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21];

/// Upper-body joints for a skeleton: the SMPL set for 22 joints, otherwise the
/// upper half of the joint indices.
pub fn default_upper_joints(layout: PoseLayout) -> Vec<usize> {
    let j = layout.joints();
    if j == 22 {
        SMPL_UPPER.to_vec()
    } else {
        (j.div_ceil(2).max(1)..j).collect()
    }
}

pub fn build_mask(task: EditTask, layout: PoseLayout, params: &MaskParams) -> Result<EditMask> {
    let t = params.frames;
    if t == 0 {
        return Err(Error::InvalidArgument("mask needs at least one frame".into()));
    }
    let d = layout.dim();
    let mut mask = EditMask::all(t, d, false);
    match task {
        EditTask::Prediction => {
            if params.prefix_frames > t {
                return Err(Error::InvalidArgument(format!("prefix {} exceeds {t} frames", params.prefix_frames)));
            }
            (0..params.prefix_frames).for_each(|f| mask.set_frame(f, true));
        }
        EditTask::InBetween => {
            if params.prefix_frames + params.suffix_frames > t {
                return Err(Error::InvalidArgument(format!(
                    "prefix {} plus suffix {} exceed {t} frames",
                    params.prefix_frames, params.suffix_frames
                )));
            }
            (0..params.prefix_frames).for_each(|f| mask.set_frame(f, true));
            (t - params.suffix_frames..t).for_each(|f| mask.set_frame(f, true));
        }
        EditTask::Interpolation => {
            if params.stride == 0 {
                return Err(Error::InvalidArgument("interpolation stride must be positive".into()));
            }
            (0..t).step_by(params.stride).for_each(|f| mask.set_frame(f, true));
        }
        EditTask::UpperBody => {
            let joints = params
                .upper_joints
                .clone()
                .unwrap_or_else(|| default_upper_joints(layout));
            mask = EditMask::all(t, d, true);
            for &j in &joints {
                if j == 0 || j >= layout.joints() {
                    return Err(Error::InvalidArgument(format!(
                        "upper-body joint {j} must be in 1..{}",
                        layout.joints()
                    )));
                }
                for col in layout.joint_columns(j) {
                    for f in 0..t {
                        mask.known[f * d + col] = false;
                    }
                }
            }
        }
    }
    if mask.known_count() == 0 {
        return Err(Error::InvalidArgument("mask has no known values".into()));
    }
    Ok(mask)
}
