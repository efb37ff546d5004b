//! Euler sampling with the known dimensions pinned to the noise-to-reference
//! chord during the early part of the trajectory.

use serde::{Deserialize, Serialize};

use super::mask::EditMask;
use crate::error::{Error, Result};
use crate::net::Condition;
use crate::numerics::DenseArray;
use crate::sampler::{check_state, draw_noise, estimate_x1, euler_update, GuidedField, Trajectory, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EditConfig {
    pub steps: usize,
    /// Rewriting happens while `t̂/N < threshold`.
    pub threshold: f64,
    pub guidance: f64,
    pub seed: u64,
}

impl Default for EditConfig {
    fn default() -> Self {
        Self {
            steps: 30,
            threshold: 0.2,
            guidance: 1.0,
            seed: 0,
        }
    }
}

impl EditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if !(self.guidance >= 0.0) || !self.guidance.is_finite() {
            return Err(Error::InvalidConfig(format!("guidance {} must be finite and >= 0", self.guidance)));
        }
        Ok(())
    }

    /// Number of steps whose state is rewritten.
    pub fn rewrite_steps(&self) -> usize {
        (0..self.steps)
            .filter(|&k| (k as f64 / self.steps as f64) < self.threshold)
            .count()
    }
}

/// Overwrites the known entries of `z` with `(1 − t) x0 + t x_ref`.
fn rewrite(z: &mut DenseArray, x0: &DenseArray, reference: &DenseArray, mask: &EditMask, t: f64) {
    let known = mask.as_slice();
    let per_item = known.len();
    let (x0, reference) = (x0.data(), reference.data());
    for (i, zi) in z.data_mut().iter_mut().enumerate() {
        if known[i % per_item] {
            *zi = (1.0 - t) * x0[i] + t * reference[i];
        }
    }
}

/// Edits a batch of references `[B, T, D]` (or a single `[T, D]` motion) in
/// model space. The returned trajectory's states are the rewritten states that
/// each Euler update starts from, followed by the final state.
pub fn rewrite_sample<F: VectorField>(
    field: &F,
    reference: &DenseArray,
    mask: &EditMask,
    conditions: &[Condition],
    config: &EditConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let reference = if reference.rank() == 2 {
        reference.clone().reshape(&[1, reference.shape()[0], reference.shape()[1]])?
    } else {
        reference.clone()
    };
    let shape = reference.shape().to_vec();
    if shape.len() != 3 || shape[1..] != mask.shape() {
        return Err(Error::shape(
            "rewrite_sample",
            format!("reference {shape:?} vs mask {:?}", mask.shape()),
        ));
    }
    if shape[0] != conditions.len() {
        return Err(Error::shape(
            "rewrite_sample",
            format!("batch {} with {} conditions", shape[0], conditions.len()),
        ));
    }
    let guided = GuidedField::new(field, config.guidance)?;
    let x0 = draw_noise(config.seed, &shape);
    let n = config.steps;
    let h = 1.0 / n as f64;

    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut x1_estimates = Vec::with_capacity(n);
    let mut z = x0.clone();
    for k in 0..n {
        let t = k as f64 / n as f64;
        if t < config.threshold {
            rewrite(&mut z, &x0, &reference, mask, t);
        }
        let v = guided.eval(&z, t, conditions)?;
        x1_estimates.push(estimate_x1(&z, t, &v)?);
        let next = euler_update(&z, h, &v)?;
        check_state(&next, k)?;
        times.push(t);
        states.push(std::mem::replace(&mut z, next));
    }
    times.push(1.0);
    states.push(z);
    Ok(Trajectory {
        times,
        states,
        x1_estimates,
    })
}
