//! The training loop: sample a minibatch, interpolate, regress, update.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{cfm_loss_on, CfmBatch};
use super::path::{PathParams, TargetKind};
use crate::error::{Error, Result};
use crate::motion::{MotionSequence, Normalizer};
use crate::net::{Checkpoint, ModelConfig, VectorFieldModel};
use crate::numerics::{AdamWConfig, DenseArray, OptimizerState};

/// Training hyperparameters; the JSON form uses the same field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub steps: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub p_drop: f64,
    pub sigma_min: f64,
    pub target: TargetKind,
    /// Standardize every feature channel with statistics from the training set.
    pub normalize: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamWConfig::default();
        Self {
            batch_size: 64,
            steps: 5000,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            weight_decay: adam.weight_decay,
            p_drop: 0.1,
            sigma_min: 0.0,
            target: TargetKind::Normalized,
            normalize: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.p_drop) {
            return Err(Error::InvalidConfig(format!("p_drop {} outside [0, 1)", self.p_drop)));
        }
        if !(self.lr > 0.0) {
            return Err(Error::InvalidConfig("lr must be positive".into()));
        }
        PathParams::new(self.sigma_min)?;
        Ok(())
    }

    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Format {
            kind: "train config",
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// The final checkpoint, or the last finite one if training diverged.
    pub checkpoint: Checkpoint,
    pub log: Vec<LogRow>,
    /// Set when a step produced a non-finite loss or gradient.
    pub diverged: Option<Error>,
}

impl TrainOutcome {
    pub fn into_result(self) -> Result<(Checkpoint, Vec<LogRow>)> {
        match self.diverged {
            Some(e) => Err(e),
            None => Ok((self.checkpoint, self.log)),
        }
    }
}

fn check_dataset(data: &[MotionSequence], model: &ModelConfig) -> Result<()> {
    let first = data
        .first()
        .ok_or_else(|| Error::InvalidArgument("training set is empty".into()))?;
    for m in data {
        m.validate()?;
        if m.frames() != model.frames || m.dim() != model.feature_dim || m.layout() != first.layout() {
            return Err(Error::shape(
                "train",
                format!(
                    "motion is {}x{}, model expects {}x{}",
                    m.frames(),
                    m.dim(),
                    model.frames,
                    model.feature_dim
                ),
            ));
        }
        if let Some(k) = m.condition() {
            if k >= model.classes {
                return Err(Error::InvalidArgument(format!(
                    "label {k} out of range for {} classes",
                    model.classes
                )));
            }
        }
    }
    Ok(())
}

/// Trains a fresh model; `on_step` sees every logged row as it is produced.
pub fn train_with_progress(
    data: &[MotionSequence],
    model_config: ModelConfig,
    config: &TrainConfig,
    mut on_step: impl FnMut(&LogRow),
) -> Result<TrainOutcome> {
    config.validate()?;
    model_config.validate()?;
    check_dataset(data, &model_config)?;
    let layout = data[0].layout();
    let normalizer = if config.normalize {
        Normalizer::fit(data)?
    } else {
        Normalizer::identity(layout.dim())
    };
    let examples: Vec<DenseArray> = data.iter().map(|m| normalizer.normalize(m.values())).collect();
    let labels: Vec<Option<usize>> = data.iter().map(|m| m.condition()).collect();

    let mut model = VectorFieldModel::init(model_config, config.seed)?;
    let mut optimizer = OptimizerState::new(config.optimizer());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let path = PathParams::new(config.sigma_min)?;
    let mut log = Vec::with_capacity(config.steps);
    let mut diverged = None;

    for step in 0..config.steps {
        let idx: Vec<usize> = (0..config.batch_size)
            .map(|_| rng.random_range(0..examples.len()))
            .collect();
        let x1 = DenseArray::stack(&idx.iter().map(|&i| examples[i].clone()).collect::<Vec<_>>())?;
        let batch_labels: Vec<Option<usize>> = idx.iter().map(|&i| labels[i]).collect();
        let batch = CfmBatch::draw(x1, &batch_labels, config.p_drop, &mut rng)?;
        let out = match cfm_loss_on(&model, &batch, path, config.target) {
            Ok(out) if out.loss.is_finite() => out,
            Ok(out) => {
                diverged = Some(Error::DivergedTraining { step, loss: out.loss });
                break;
            }
            Err(Error::NonFinite { .. } | Error::NonFiniteGradient(_)) => {
                diverged = Some(Error::DivergedTraining { step, loss: f64::NAN });
                break;
            }
            Err(e) => return Err(e),
        };
        // A failed update leaves the parameters untouched, so they are still the last good ones.
        if let Err(e) = optimizer.step(model.params_mut(), &out.grads) {
            diverged = Some(match e {
                Error::NonFiniteGradient(_) => Error::DivergedTraining { step, loss: out.loss },
                other => return Err(other),
            });
            break;
        }
        let row = LogRow {
            step,
            loss: out.loss,
            lr: config.lr,
        };
        on_step(&row);
        log.push(row);
    }

    Ok(TrainOutcome {
        checkpoint: Checkpoint::new(model, layout, normalizer)?,
        log,
        diverged,
    })
}

pub fn train(data: &[MotionSequence], model_config: ModelConfig, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(data, model_config, config, |_| {})
}

/// Writes the `step,loss,lr` training log.
pub fn write_training_log(path: &Path, log: &[LogRow]) -> Result<()> {
    let mut out = String::from("step,loss,lr\n");
    for row in log {
        out.push_str(&format!("{},{},{}\n", row.step, row.loss, row.lr));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Trailing moving average of the loss column with window `w`.
pub fn moving_average(log: &[LogRow], w: usize) -> Vec<f64> {
    if w == 0 || log.len() < w {
        return Vec::new();
    }
    let mut acc: f64 = log[..w].iter().map(|r| r.loss).sum();
    let mut out = vec![acc / w as f64];
    for i in w..log.len() {
        acc += log[i].loss - log[i - w].loss;
        out.push(acc / w as f64);
    }
    out
}
