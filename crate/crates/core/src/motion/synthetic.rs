//! Seeded toy datasets standing in for real motion corpora.
//!
//! * `point`: one fixed feature array per class; every sample of a class is
//!   bit-identical to it.
//! * `sine-walker`: non-root joints oscillate with class-specific frequency
//!   and amplitude and a per-sample random phase. Velocities are first
//!   differences of positions times the frame rate, rotations are axis-angle
//!   rotations driven by the same oscillation, and foot contacts threshold the
//!   speed of four proxy joints.
//! * `gaussian-shift`: every frame is drawn i.i.d. from `N(shift·k·1, σ²I)` for class `k`.

use std::f64::consts::TAU;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::layout::PoseLayout;
use super::sequence::MotionSequence;
use crate::error::{Error, Result};
use crate::numerics::DenseArray;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFamily {
    Point,
    SineWalker,
    GaussianShift,
}

impl FromStr for DatasetFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "point" => Ok(Self::Point),
            "sine-walker" => Ok(Self::SineWalker),
            "gaussian-shift" => Ok(Self::GaussianShift),
            _ => Err(Error::InvalidArgument(format!("unknown dataset family `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDatasetSpec {
    pub family: DatasetFamily,
    pub joints: usize,
    pub frames: usize,
    pub classes: usize,
    pub samples_per_class: usize,
    pub seed: u64,
    /// Mean offset between consecutive classes (`gaussian-shift`).
    #[serde(default = "default_shift")]
    pub shift: f64,
    /// Per-frame standard deviation (`gaussian-shift`).
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Frames per second (`sine-walker`).
    #[serde(default = "default_fps")]
    pub fps: f64,
}

fn default_shift() -> f64 {
    3.0
}

fn default_sigma() -> f64 {
    1.0
}

fn default_fps() -> f64 {
    20.0
}

impl SyntheticDatasetSpec {
    pub fn new(family: DatasetFamily, joints: usize, frames: usize, classes: usize, samples_per_class: usize, seed: u64) -> Self {
        Self {
            family,
            joints,
            frames,
            classes,
            samples_per_class,
            seed,
            shift: default_shift(),
            sigma: default_sigma(),
            fps: default_fps(),
        }
    }

    pub fn layout(&self) -> Result<PoseLayout> {
        PoseLayout::new(self.joints)
    }

    fn validate(&self) -> Result<()> {
        if self.classes == 0 {
            return Err(Error::InvalidConfig("dataset needs at least one class".into()));
        }
        if self.samples_per_class == 0 {
            return Err(Error::InvalidConfig("dataset needs at least one sample per class".into()));
        }
        if self.frames == 0 {
            return Err(Error::InvalidConfig("dataset needs at least one frame".into()));
        }
        if !(self.sigma >= 0.0 && self.fps > 0.0 && self.shift.is_finite()) {
            return Err(Error::InvalidConfig("sigma, fps and shift must be valid".into()));
        }
        Ok(())
    }
}

/// Generates `classes × samples_per_class` sequences, class-major. Pure in `spec`.
pub fn gen_synthetic_dataset(spec: &SyntheticDatasetSpec) -> Result<Vec<MotionSequence>> {
    spec.validate()?;
    let layout = spec.layout()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.classes * spec.samples_per_class);
    match spec.family {
        DatasetFamily::Point => {
            let shape = [spec.frames, layout.dim()];
            let prototypes: Vec<DenseArray> = (0..spec.classes)
                .map(|_| DenseArray::randn(&shape, &mut rng))
                .collect();
            for (k, proto) in prototypes.into_iter().enumerate() {
                for _ in 0..spec.samples_per_class {
                    out.push(MotionSequence::new(layout, proto.clone(), Some(k))?);
                }
            }
        }
        DatasetFamily::GaussianShift => {
            let shape = [spec.frames, layout.dim()];
            for k in 0..spec.classes {
                let mean = spec.shift * k as f64;
                for _ in 0..spec.samples_per_class {
                    let values = DenseArray::randn(&shape, &mut rng).map(|z| mean + spec.sigma * z);
                    out.push(MotionSequence::new(layout, values, Some(k))?);
                }
            }
        }
        DatasetFamily::SineWalker => {
            let classes: Vec<WalkerClass> = (0..spec.classes)
                .map(|_| WalkerClass::draw(layout, &mut rng))
                .collect();
            for (k, class) in classes.iter().enumerate() {
                for _ in 0..spec.samples_per_class {
                    let phase = rng.random_range(0.0..TAU);
                    let gain = rng.random_range(0.9..1.1);
                    let values = class.render(layout, spec.frames, spec.fps, phase, gain);
                    out.push(MotionSequence::new(layout, values, Some(k))?);
                }
            }
        }
    }
    Ok(out)
}

/// Class-level parameters of the sine-walker family.
struct WalkerClass {
    /// Angular frequency in rad/s.
    omega: f64,
    amplitude: f64,
    speed: f64,
    turn_rate: f64,
    height: f64,
    /// Rest offset and per-axis amplitude weight for each non-root joint.
    rest: Vec<[f64; 3]>,
    weight: Vec<[f64; 3]>,
    joint_phase: Vec<f64>,
    /// Unit rotation axis per non-root joint.
    axis: Vec<[f64; 3]>,
}

impl WalkerClass {
    fn draw(layout: PoseLayout, rng: &mut ChaCha8Rng) -> Self {
        let n = layout.joints() - 1;
        let omega = TAU * rng.random_range(0.75..2.0);
        let amplitude = rng.random_range(0.3..1.0);
        let speed = rng.random_range(0.5..1.5);
        let turn_rate = rng.random_range(-0.5..0.5);
        let height = rng.random_range(0.8..1.2);
        let mut normal = || rng.sample::<f64, _>(StandardNormal);
        let rest = (0..n).map(|_| [0.5 * normal(), 0.5 * normal(), 0.5 * normal()]).collect();
        let axis = (0..n)
            .map(|_| {
                let v = [normal(), normal(), normal()];
                let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-12);
                [v[0] / len, v[1] / len, v[2] / len]
            })
            .collect();
        let weight = (0..n)
            .map(|_| {
                [
                    rng.random_range(0.5..1.0),
                    rng.random_range(0.5..1.0),
                    rng.random_range(0.5..1.0),
                ]
            })
            .collect();
        let joint_phase = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
        Self {
            omega,
            amplitude,
            speed,
            turn_rate,
            height,
            rest,
            weight,
            joint_phase,
            axis,
        }
    }

    fn joint_position(&self, joint: usize, time: f64, phase: f64, gain: f64) -> [f64; 3] {
        let a = self.amplitude * gain;
        let base = self.omega * time + phase + self.joint_phase[joint];
        let r = self.rest[joint];
        let w = self.weight[joint];
        [
            r[0] + a * w[0] * base.sin(),
            r[1] + a * w[1] * (base + 1.0).sin(),
            r[2] + a * w[2] * (base + 2.0).sin(),
        ]
    }

    fn root_height(&self, time: f64, phase: f64) -> f64 {
        self.height + 0.05 * (2.0 * (self.omega * time + phase)).sin()
    }

    fn render(&self, layout: PoseLayout, frames: usize, fps: f64, phase: f64, gain: f64) -> DenseArray {
        let dim = layout.dim();
        let n = layout.joints() - 1;
        let mut data = vec![0.0; frames * dim];
        let contact_threshold = 0.5 * self.amplitude * gain * self.omega;
        for f in 0..frames {
            let time = f as f64 / fps;
            let prev_time = (f as f64 - 1.0) / fps;
            let row = &mut data[f * dim..(f + 1) * dim];
            let cycle = self.omega * time + phase;

            row[0] = self.turn_rate + 0.1 * cycle.cos();
            row[1] = self.speed + 0.1 * (2.0 * cycle).sin();
            row[2] = 0.1 * cycle.cos();
            row[3] = self.root_height(time, phase);

            let root_vel = layout.joint_velocity(0).unwrap();
            row[root_vel.start] = row[1];
            row[root_vel.start + 1] = (self.root_height(time, phase) - self.root_height(prev_time, phase)) * fps;
            row[root_vel.start + 2] = row[2];

            let mut speeds = Vec::with_capacity(n);
            for j in 0..n {
                let p = self.joint_position(j, time, phase, gain);
                let q = self.joint_position(j, prev_time, phase, gain);
                let pos = layout.joint_position(j + 1).unwrap();
                let vel = layout.joint_velocity(j + 1).unwrap();
                let mut speed2 = 0.0;
                for a in 0..3 {
                    row[pos.start + a] = p[a];
                    let v = (p[a] - q[a]) * fps;
                    row[vel.start + a] = v;
                    speed2 += v * v;
                }
                speeds.push(speed2.sqrt());

                let angle = 0.5 * self.amplitude * gain * (cycle + self.joint_phase[j]).sin();
                let rot = layout.joint_rotation(j + 1).unwrap();
                row[rot].copy_from_slice(&rotation_6d(self.axis[j], angle));
            }

            let contacts = layout.foot_contacts();
            for (c, col) in contacts.enumerate() {
                let joint = c % n;
                row[col] = if speeds[joint] < contact_threshold { 1.0 } else { 0.0 };
            }
        }
        DenseArray::from_parts(vec![frames, dim], data)
    }
}

/// First two columns of the rotation by `angle` about unit `axis` (Rodrigues).
fn rotation_6d(axis: [f64; 3], angle: f64) -> [f64; 6] {
    let (s, c) = angle.sin_cos();
    let [x, y, z] = axis;
    let t = 1.0 - c;
    let r00 = c + x * x * t;
    let r10 = y * x * t + z * s;
    let r20 = z * x * t - y * s;
    let r01 = x * y * t - z * s;
    let r11 = c + y * y * t;
    let r21 = z * y * t + x * s;
    [r00, r10, r20, r01, r11, r21]
}
