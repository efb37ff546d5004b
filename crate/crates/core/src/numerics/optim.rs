//! AdamW with decoupled weight decay and bias-corrected moments.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::array::DenseArray;
use super::params::ParamSet;
use super::tape::Gradients;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub config: AdamWConfig,
    step: u64,
    first: HashMap<String, DenseArray>,
    second: HashMap<String, DenseArray>,
}

impl OptimizerState {
    pub fn new(config: AdamWConfig) -> Self {
        Self {
            config,
            step: 0,
            first: HashMap::new(),
            second: HashMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, name: &str) -> Option<&DenseArray> {
        self.first.get(name)
    }

    /// Applies one update in place.
    ///
    /// On error (bad shape, non-finite gradient, or an update that overflows)
    /// both `params` and the optimizer state are left as they were.
    pub fn step(&mut self, params: &mut ParamSet, grads: &Gradients) -> Result<()> {
        for (name, value) in params.iter() {
            let Some(g) = grads.get(name) else {
                continue;
            };
            if g.shape() != value.shape() {
                return Err(Error::shape(
                    "optimizer_step",
                    format!("`{name}`: param {:?} vs grad {:?}", value.shape(), g.shape()),
                ));
            }
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient(name.to_string()));
            }
        }

        let step = self.step + 1;
        let AdamWConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let bias1 = 1.0 - beta1.powi(step as i32);
        let bias2 = 1.0 - beta2.powi(step as i32);

        // Updates are staged so that an overflow leaves everything untouched.
        let mut staged = Vec::new();
        for (name, value) in params.iter() {
            let Some(g) = grads.get(name) else {
                continue;
            };
            let n = value.len();
            let (mut p, mut m, mut v) = (value.data().to_vec(), vec![0.0; n], vec![0.0; n]);
            if let Some(prev) = self.first.get(name) {
                m.copy_from_slice(prev.data());
            }
            if let Some(prev) = self.second.get(name) {
                v.copy_from_slice(prev.data());
            }
            for i in 0..n {
                let gi = g.data()[i];
                p[i] -= lr * weight_decay * p[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                p[i] -= lr * (m[i] / bias1) / ((v[i] / bias2).sqrt() + eps);
            }
            if !(p.iter().chain(&m).chain(&v).all(|x| x.is_finite())) {
                return Err(Error::NonFiniteGradient(name.to_string()));
            }
            let shape = value.shape().to_vec();
            staged.push((name.to_string(), shape, p, m, v));
        }

        for (name, shape, p, m, v) in staged {
            params
                .get_mut(&name)
                .expect("staged names come from params")
                .data_mut()
                .copy_from_slice(&p);
            self.first.insert(name.clone(), DenseArray::from_parts(shape.clone(), m));
            self.second.insert(name, DenseArray::from_parts(shape, v));
        }
        self.step = step;
        Ok(())
    }
}
