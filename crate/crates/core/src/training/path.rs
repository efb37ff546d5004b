//! The noise-to-data interpolant and its regression target.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseArray;

/// Below this the normalized target has no finite value.
const MIN_DENOMINATOR: f64 = 1e-9;

/// Which closed form the regression target uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    /// `(x1 - (1 - σ) x_t) / (1 - (1 - σ) t)`, equal to `x1 - x0` at `σ = 0`.
    #[default]
    Normalized,
    /// `x1 - (1 - σ) x_t` without the time normalization.
    Literal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub sigma_min: f64,
}

impl PathParams {
    pub fn new(sigma_min: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma_min) {
            return Err(Error::InvalidConfig(format!("sigma_min {sigma_min} outside [0, 1)")));
        }
        Ok(Self { sigma_min })
    }
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("t = {t} outside [0, 1]")))
    }
}

/// `x_t = t x1 + (1 - (1 - σ) t) x0`.
pub fn interpolate(x0: &DenseArray, x1: &DenseArray, t: f64, sigma_min: f64) -> Result<DenseArray> {
    check_t(t)?;
    let a = 1.0 - (1.0 - sigma_min) * t;
    x0.zip_map(x1, |u, v| t * v + a * u)
}

/// Normalized regression target evaluated at `x_t = interpolate(x0, x1, t, σ)`.
pub fn target_field(x0: &DenseArray, x1: &DenseArray, t: f64, sigma_min: f64) -> Result<DenseArray> {
    target_field_with(TargetKind::Normalized, x0, x1, t, sigma_min)
}

pub fn target_field_with(
    kind: TargetKind,
    x0: &DenseArray,
    x1: &DenseArray,
    t: f64,
    sigma_min: f64,
) -> Result<DenseArray> {
    check_t(t)?;
    let k = 1.0 - sigma_min;
    match kind {
        TargetKind::Normalized => {
            let denom = 1.0 - k * t;
            if denom < MIN_DENOMINATOR {
                return Err(Error::InvalidArgument(format!(
                    "target field undefined at t = {t} with sigma_min = {sigma_min}"
                )));
            }
            // Substituting x_t, the quotient simplifies to x1 - (1 - σ) x0.
            x1.zip_map(x0, |v, u| v - k * u)
        }
        TargetKind::Literal => {
            let xt = interpolate(x0, x1, t, sigma_min)?;
            x1.zip_map(&xt, |v, u| v - k * u)
        }
    }
}
