//! Vector fields the samplers integrate: the trained network, its guided
//! combination, and closed-form fields used as oracles.

use crate::error::{Error, Result};
use crate::net::{Condition, VectorFieldModel};
use crate::numerics::DenseArray;

/// Below this distance to `t = 1` the single-point field is taken to be zero.
const ORACLE_EPS: f64 = 1e-12;

/// A time-dependent field evaluated on a batch `[B, T, D]` at a shared time.
pub trait VectorField {
    fn eval(&self, x: &DenseArray, t: f64, conditions: &[Condition]) -> Result<DenseArray>;
}

impl<F: VectorField + ?Sized> VectorField for &F {
    fn eval(&self, x: &DenseArray, t: f64, conditions: &[Condition]) -> Result<DenseArray> {
        (**self).eval(x, t, conditions)
    }
}

impl VectorField for VectorFieldModel {
    fn eval(&self, x: &DenseArray, t: f64, conditions: &[Condition]) -> Result<DenseArray> {
        let batch = x.shape().first().copied().unwrap_or(0);
        self.predict(x, &vec![t; batch], conditions)
    }
}

/// `v(x, t) = k` everywhere.
#[derive(Debug, Clone)]
pub struct ConstantField {
    pub value: DenseArray,
}

impl VectorField for ConstantField {
    fn eval(&self, x: &DenseArray, _t: f64, _conditions: &[Condition]) -> Result<DenseArray> {
        let per_item = self.value.len();
        if per_item == 0 || x.len() % per_item != 0 {
            return Err(Error::shape("constant field", format!("{:?} vs {:?}", x.shape(), self.value.shape())));
        }
        let data = self.value.data().repeat(x.len() / per_item);
        DenseArray::new(x.shape().to_vec(), data)
    }
}

/// The exact conditional field of a dataset holding the single point `x1*`:
/// `v(x, t) = (x1* − x) / (1 − t)`.
#[derive(Debug, Clone)]
pub struct SinglePointField {
    pub target: DenseArray,
}

impl VectorField for SinglePointField {
    fn eval(&self, x: &DenseArray, t: f64, _conditions: &[Condition]) -> Result<DenseArray> {
        let per_item = self.target.len();
        if per_item == 0 || x.len() % per_item != 0 {
            return Err(Error::shape("single-point field", format!("{:?} vs {:?}", x.shape(), self.target.shape())));
        }
        let remaining = 1.0 - t;
        if remaining < ORACLE_EPS {
            return Ok(DenseArray::zeros(x.shape()));
        }
        let target = self.target.data();
        let data = x
            .data()
            .iter()
            .enumerate()
            .map(|(i, &xi)| (target[i % per_item] - xi) / remaining)
            .collect();
        DenseArray::new(x.shape().to_vec(), data)
    }
}

/// Classifier-free guidance: `v(x,t,∅) + s (v(x,t,c) − v(x,t,∅))`.
///
/// `s = 1` skips the unconditional evaluation entirely.
#[derive(Debug, Clone)]
pub struct GuidedField<F> {
    pub inner: F,
    pub strength: f64,
}

impl<F: VectorField> GuidedField<F> {
    pub fn new(inner: F, strength: f64) -> Result<Self> {
        if !(strength >= 0.0) || !strength.is_finite() {
            return Err(Error::InvalidArgument(format!("guidance strength {strength} must be finite and >= 0")));
        }
        Ok(Self { inner, strength })
    }
}

/// Combines a conditional and an unconditional prediction.
pub fn guided_combination(v_cond: &DenseArray, v_null: &DenseArray, s: f64) -> Result<DenseArray> {
    if s == 1.0 {
        return Ok(v_cond.clone());
    }
    if s == 0.0 {
        return Ok(v_null.clone());
    }
    v_null.zip_map(v_cond, |u, c| u + s * (c - u))
}

impl<F: VectorField> VectorField for GuidedField<F> {
    fn eval(&self, x: &DenseArray, t: f64, conditions: &[Condition]) -> Result<DenseArray> {
        let v_cond = self.inner.eval(x, t, conditions)?;
        if self.strength == 1.0 || conditions.iter().all(|c| c.is_null()) {
            return Ok(v_cond);
        }
        let nulls = vec![Condition::Null; conditions.len()];
        let v_null = self.inner.eval(x, t, &nulls)?;
        // Null items get v_cond == v_null, so the combination returns v_null for them.
        guided_combination(&v_cond, &v_null, self.strength)
    }
}

/// `x̂₁ = x_t + (1 − t) v`.
pub fn estimate_x1(x_t: &DenseArray, t: f64, v: &DenseArray) -> Result<DenseArray> {
    x_t.axpy(1.0 - t, v)
}
