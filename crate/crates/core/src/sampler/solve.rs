//! Fixed-grid ODE integration from `t = 0` to `t = 1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::field::{estimate_x1, GuidedField, VectorField};
use crate::error::{Error, Result};
use crate::net::Condition;
use crate::numerics::DenseArray;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    #[default]
    Euler,
    Midpoint,
    Rk4,
}

impl Solver {
    /// Field evaluations per step.
    pub fn stages(self) -> usize {
        match self {
            Solver::Euler => 1,
            Solver::Midpoint => 2,
            Solver::Rk4 => 4,
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Solver::Euler),
            "midpoint" => Ok(Solver::Midpoint),
            "rk4" => Ok(Solver::Rk4),
            other => Err(Error::InvalidArgument(format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub solver: Solver,
    pub steps: usize,
    pub guidance: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            solver: Solver::Euler,
            steps: 10,
            guidance: 1.0,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if !(self.guidance >= 0.0) || !self.guidance.is_finite() {
            return Err(Error::InvalidConfig(format!("guidance {} must be finite and >= 0", self.guidance)));
        }
        Ok(())
    }
}

/// States on the grid `t̂/N` for `t̂ = 0..=N` and the `x̂₁` estimate made at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DenseArray>,
    pub x1_estimates: Vec<DenseArray>,
}

impl Trajectory {
    fn start(x0: DenseArray, steps: usize) -> Self {
        let mut states = Vec::with_capacity(steps + 1);
        states.push(x0);
        Self {
            times: vec![0.0],
            states,
            x1_estimates: Vec::with_capacity(steps),
        }
    }

    pub fn steps(&self) -> usize {
        self.x1_estimates.len()
    }

    pub fn initial(&self) -> &DenseArray {
        &self.states[0]
    }

    pub fn last(&self) -> &DenseArray {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Standard normal draw of the given shape from a seeded stream.
pub fn draw_noise(seed: u64, shape: &[usize]) -> DenseArray {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseArray::randn(shape, &mut rng)
}

/// `x + h v`, the update shared by every explicit step.
pub(crate) fn euler_update(x: &DenseArray, h: f64, v: &DenseArray) -> Result<DenseArray> {
    x.axpy(h, v)
}

pub(crate) fn check_state(x: &DenseArray, step: usize) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::DivergedSampling { step })
    }
}

/// One solver step from `(x, t)` with width `h`. Returns the new state and the
/// field at `(x, t)`.
fn step<F: VectorField>(
    field: &F,
    solver: Solver,
    x: &DenseArray,
    t: f64,
    h: f64,
    conditions: &[Condition],
) -> Result<(DenseArray, DenseArray)> {
    let k1 = field.eval(x, t, conditions)?;
    let next = match solver {
        Solver::Euler => euler_update(x, h, &k1)?,
        Solver::Midpoint => {
            let mid = x.axpy(0.5 * h, &k1)?;
            let k2 = field.eval(&mid, t + 0.5 * h, conditions)?;
            x.axpy(h, &k2)?
        }
        Solver::Rk4 => {
            let k2 = field.eval(&x.axpy(0.5 * h, &k1)?, t + 0.5 * h, conditions)?;
            let k3 = field.eval(&x.axpy(0.5 * h, &k2)?, t + 0.5 * h, conditions)?;
            let k4 = field.eval(&x.axpy(h, &k3)?, (t + h).min(1.0), conditions)?;
            let mut incr = k1.axpy(2.0, &k2)?;
            incr = incr.axpy(2.0, &k3)?;
            incr = incr.add(&k4)?;
            x.axpy(h / 6.0, &incr)?
        }
    };
    Ok((next, k1))
}

/// Integrates `field` from the given `x0` over the uniform grid `t̂/N`.
pub fn integrate<F: VectorField>(
    field: &F,
    x0: DenseArray,
    conditions: &[Condition],
    solver: Solver,
    steps: usize,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidConfig("steps must be at least 1".into()));
    }
    if x0.rank() != 3 || x0.shape()[0] != conditions.len() {
        return Err(Error::shape(
            "sample",
            format!("noise {:?} with {} conditions", x0.shape(), conditions.len()),
        ));
    }
    let h = 1.0 / steps as f64;
    let mut traj = Trajectory::start(x0, steps);
    for k in 0..steps {
        let t = k as f64 / steps as f64;
        let x = traj.last();
        let (next, v) = step(field, solver, x, t, h, conditions)?;
        check_state(&next, k)?;
        traj.x1_estimates.push(estimate_x1(x, t, &v)?);
        traj.states.push(next);
        traj.times.push((k + 1) as f64 / steps as f64);
    }
    Ok(traj)
}

/// Draws noise with `config.seed` and integrates the guided field.
///
/// `sample_shape` is the per-item `[T, D]`; one item is produced per condition.
pub fn sample<F: VectorField>(
    field: &F,
    conditions: &[Condition],
    sample_shape: [usize; 2],
    config: &SamplerConfig,
) -> Result<Trajectory> {
    config.validate()?;
    if conditions.is_empty() {
        return Err(Error::InvalidArgument("nothing to sample".into()));
    }
    let x0 = draw_noise(config.seed, &[conditions.len(), sample_shape[0], sample_shape[1]]);
    let guided = GuidedField::new(field, config.guidance)?;
    integrate(&guided, x0, conditions, config.solver, config.steps)
}

/// Network evaluations used by one sample.
pub fn nfe(config: &SamplerConfig, conditional: bool) -> usize {
    let per_eval = if conditional && config.guidance != 1.0 { 2 } else { 1 };
    config.steps * config.solver.stages() * per_eval
}
