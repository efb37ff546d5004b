//! The conditional flow-matching regression loss.

use rand::Rng;

use super::path::{interpolate, target_field_with, PathParams, TargetKind};
use crate::error::{Error, Result};
use crate::net::{Condition, VectorFieldModel};
use crate::numerics::{DenseArray, Gradients, Tape};

/// Upper end of the training time range, keeping clear of the pole at `t = 1`.
pub const T_MAX: f64 = 1.0 - 1e-5;

/// One minibatch with its noise, times and (possibly dropped) conditions drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct CfmBatch {
    /// Data endpoints `[B, T, D]`.
    pub x1: DenseArray,
    /// Noise endpoints, same shape as `x1`.
    pub x0: DenseArray,
    pub t: Vec<f64>,
    pub conditions: Vec<Condition>,
}

impl CfmBatch {
    /// Draws `x0 ~ N(0, I)`, `t ~ U[0, T_MAX]` and replaces each label by the
    /// null condition with probability `p_drop`, independently per item.
    pub fn draw<R: Rng + ?Sized>(x1: DenseArray, labels: &[Option<usize>], p_drop: f64, rng: &mut R) -> Result<Self> {
        if x1.rank() != 3 || x1.shape()[0] == 0 {
            return Err(Error::shape("cfm_loss", format!("expected non-empty [B, T, D], got {:?}", x1.shape())));
        }
        if labels.len() != x1.shape()[0] {
            return Err(Error::shape(
                "cfm_loss",
                format!("{} labels for batch {}", labels.len(), x1.shape()[0]),
            ));
        }
        if !(0.0..=1.0).contains(&p_drop) {
            return Err(Error::InvalidConfig(format!("p_drop {p_drop} outside [0, 1]")));
        }
        let x0 = DenseArray::randn(x1.shape(), rng);
        let mut t = Vec::with_capacity(labels.len());
        let mut conditions = Vec::with_capacity(labels.len());
        for &label in labels {
            t.push(rng.random::<f64>() * T_MAX);
            let dropped = rng.random::<f64>() < p_drop;
            conditions.push(if dropped { Condition::Null } else { Condition::from_label(label) });
        }
        Ok(Self { x1, x0, t, conditions })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn null_count(&self) -> usize {
        self.conditions.iter().filter(|c| c.is_null()).count()
    }

    /// `(x_t, w)` stacked over the batch.
    pub fn inputs_and_targets(&self, path: PathParams, kind: TargetKind) -> Result<(DenseArray, DenseArray)> {
        let mut xt = Vec::with_capacity(self.len());
        let mut w = Vec::with_capacity(self.len());
        for (i, &t) in self.t.iter().enumerate() {
            let (a, b) = (self.x0.outer(i), self.x1.outer(i));
            xt.push(interpolate(&a, &b, t, path.sigma_min)?);
            w.push(target_field_with(kind, &a, &b, t, path.sigma_min)?);
        }
        Ok((DenseArray::stack(&xt)?, DenseArray::stack(&w)?))
    }
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub grads: Gradients,
    /// How many batch items used the null condition.
    pub null_count: usize,
}

/// Mean over the batch of `‖v(x_t, t, c) − w‖²` and its parameter gradients.
pub fn cfm_loss_on(model: &VectorFieldModel, batch: &CfmBatch, path: PathParams, kind: TargetKind) -> Result<LossOutput> {
    let (xt, w) = batch.inputs_and_targets(path, kind)?;
    let mut tape = Tape::new();
    let vars = model.params().bind(&mut tape);
    let x = tape.input("x_t", xt);
    let v = model.forward(&mut tape, &vars, x, &batch.t, &batch.conditions)?;
    let w = tape.constant(w);
    let diff = tape.sub(v, w)?;
    let sq = tape.square(diff);
    let total = tape.sum(sq);
    let loss = tape.scale(total, 1.0 / batch.len() as f64)?;
    let (loss, grads) = tape.forward_backward(loss)?;
    Ok(LossOutput {
        loss,
        grads,
        null_count: batch.null_count(),
    })
}

/// Draws a batch from `rng` and evaluates the loss on it.
pub fn cfm_loss<R: Rng + ?Sized>(
    model: &VectorFieldModel,
    x1: DenseArray,
    labels: &[Option<usize>],
    path: PathParams,
    p_drop: f64,
    rng: &mut R,
) -> Result<LossOutput> {
    let batch = CfmBatch::draw(x1, labels, p_drop, rng)?;
    cfm_loss_on(model, &batch, path, TargetKind::Normalized)
}
