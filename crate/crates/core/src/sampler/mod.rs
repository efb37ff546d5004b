//! ODE sampling with classifier-free guidance.

mod field;
mod solve;

pub use field::{
    estimate_x1, guided_combination, ConstantField, GuidedField, SinglePointField, VectorField,
};
pub(crate) use solve::{check_state, euler_update};
pub use solve::{draw_noise, integrate, nfe, sample, SamplerConfig, Solver, Trajectory};
