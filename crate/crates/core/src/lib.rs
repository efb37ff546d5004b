pub mod editing;
pub mod error;
mod io_util;
pub mod manifest;
pub mod metrics;
pub mod motion;
pub mod net;
pub mod numerics;
pub mod pipeline;
pub mod sampler;
pub mod training;

pub use error::{Error, Result};
