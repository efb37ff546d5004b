//! Dense arrays, reverse-mode differentiation, AdamW and the PSD square root.

mod array;
pub mod checkpoint;
mod kernels;
pub mod linalg;
mod optim;
mod params;
mod tape;

pub use array::DenseArray;
pub use linalg::matrix_sqrt_psd;
pub use optim::{AdamWConfig, OptimizerState};
pub use params::ParamSet;
pub use tape::{Gradients, Tape, Var};
