//! Deterministic motion feature extractors.
//!
//! Both extractors start from the same pooled statistics: the temporal mean
//! and standard deviation of every feature channel, concatenated into a
//! `2D` vector. The random projection maps that through a fixed seeded
//! Gaussian matrix; the trained encoder is the first half of a small
//! autoencoder fitted to the pooled statistics of a dataset.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::MotionSequence;
use crate::numerics::{AdamWConfig, DenseArray, OptimizerState, ParamSet, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Gt,
    Pred,
    Text,
}

/// `n × F` features with their origin.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub values: DenseArray,
    pub provenance: Provenance,
}

impl FeatureSet {
    pub fn new(values: DenseArray, provenance: Provenance) -> Result<Self> {
        if values.rank() != 2 {
            return Err(Error::shape("feature set", format!("expected [n, F], got {:?}", values.shape())));
        }
        if !values.is_finite() {
            return Err(Error::InvalidArgument("feature set contains non-finite values".into()));
        }
        Ok(Self { values, provenance })
    }

    pub fn len(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> FeatureSet {
        let f = self.dim();
        let mut data = Vec::with_capacity(indices.len() * f);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureSet {
            values: DenseArray::new(vec![indices.len(), f], data).expect("rows have width F"),
            provenance: self.provenance,
        }
    }
}

/// Temporal mean then temporal standard deviation of every channel.
pub fn pooled_statistics(motion: &MotionSequence) -> Vec<f64> {
    let (m, d) = (motion.frames(), motion.dim());
    let mut mean = vec![0.0; d];
    for f in 0..m {
        for (acc, v) in mean.iter_mut().zip(motion.frame(f)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    let mut var = vec![0.0; d];
    for f in 0..m {
        for ((acc, v), mu) in var.iter_mut().zip(motion.frame(f)).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    mean.extend(var.iter().map(|v| (v / m as f64).sqrt()));
    mean
}

fn pooled_matrix(motions: &[MotionSequence]) -> Result<DenseArray> {
    let first = motions
        .first()
        .ok_or_else(|| Error::InvalidArgument("no motions to extract features from".into()))?;
    let d = first.dim();
    let mut data = Vec::with_capacity(motions.len() * 2 * d);
    for m in motions {
        if m.dim() != d || m.layout() != first.layout() {
            return Err(Error::shape("extract_features", "motions do not share a layout"));
        }
        data.extend(pooled_statistics(m));
    }
    DenseArray::new(vec![motions.len(), 2 * d], data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub dim: usize,
    pub hidden: usize,
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            hidden: 64,
            steps: 500,
            lr: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureExtractor {
    RandomProjection { seed: u64, matrix: DenseArray },
    TrainedEncoder { params: ParamSet, input_mean: Vec<f64>, input_std: Vec<f64> },
}

/// Describes an extractor in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorInfo {
    pub kind: String,
    pub seed: u64,
    pub dim: usize,
    /// Always false: these features do not reproduce the published evaluator.
    pub comparable_to_published: bool,
}

impl FeatureExtractor {
    /// Projection from the pooled `2D` statistics to `dim` features.
    pub fn random_projection(feature_dim: usize, dim: usize, seed: u64) -> Result<Self> {
        if feature_dim == 0 || dim == 0 {
            return Err(Error::InvalidArgument("feature dimensions must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = 2 * feature_dim;
        let matrix = DenseArray::randn(&[input, dim], &mut rng).scale(1.0 / (input as f64).sqrt());
        Ok(Self::RandomProjection { seed, matrix })
    }

    /// Fits a `2D → hidden → dim → hidden → 2D` autoencoder on pooled statistics
    /// and keeps the encoder half.
    pub fn train_encoder(motions: &[MotionSequence], config: &EncoderConfig) -> Result<Self> {
        let x = pooled_matrix(motions)?;
        let (n, input) = (x.shape()[0], x.shape()[1]);
        let mut input_mean = vec![0.0; input];
        let mut input_std = vec![0.0; input];
        for i in 0..n {
            for (acc, v) in input_mean.iter_mut().zip(x.row(i)) {
                *acc += v / n as f64;
            }
        }
        for i in 0..n {
            for ((acc, v), mu) in input_std.iter_mut().zip(x.row(i)).zip(&input_mean) {
                *acc += (v - mu) * (v - mu) / n as f64;
            }
        }
        input_std
            .iter_mut()
            .for_each(|s| *s = if s.sqrt() < 1e-6 { 1.0 } else { s.sqrt() });
        let xs = standardize(&x, &input_mean, &input_std);

        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamSet::new();
        let layers = [
            ("enc1", input, config.hidden),
            ("enc2", config.hidden, config.dim),
            ("dec1", config.dim, config.hidden),
            ("dec2", config.hidden, input),
        ];
        for (name, fan_in, fan_out) in layers {
            let w = DenseArray::randn(&[fan_in, fan_out], &mut rng).scale(1.0 / (fan_in as f64).sqrt());
            params.insert(format!("{name}.w"), w)?;
            params.insert(format!("{name}.b"), DenseArray::zeros(&[fan_out]))?;
        }
        let mut opt = OptimizerState::new(AdamWConfig {
            lr: config.lr,
            ..AdamWConfig::default()
        });
        for _ in 0..config.steps {
            let mut tape = Tape::new();
            let vars = params.bind(&mut tape);
            let input = tape.input("pooled", xs.clone());
            let code = encode(&mut tape, &vars, input)?;
            let h = tape.affine(code, vars["dec1.w"], vars["dec1.b"])?;
            let h = tape.gelu(h);
            let recon = tape.affine(h, vars["dec2.w"], vars["dec2.b"])?;
            let diff = tape.sub(recon, input)?;
            let sq = tape.square(diff);
            let loss = tape.mean(sq);
            let (_, grads) = tape.forward_backward(loss)?;
            opt.step(&mut params, &grads)?;
        }
        let mut encoder = ParamSet::new();
        for (name, value) in params.iter().filter(|(n, _)| n.starts_with("enc")) {
            encoder.insert(name, value.clone())?;
        }
        Ok(Self::TrainedEncoder {
            params: encoder,
            input_mean,
            input_std,
        })
    }

    pub fn info(&self) -> ExtractorInfo {
        match self {
            Self::RandomProjection { seed, matrix } => ExtractorInfo {
                kind: "random_projection".into(),
                seed: *seed,
                dim: matrix.shape()[1],
                comparable_to_published: false,
            },
            Self::TrainedEncoder { params, .. } => ExtractorInfo {
                kind: "trained_encoder".into(),
                seed: 0,
                dim: params.get("enc2.b").map_or(0, |b| b.len()),
                comparable_to_published: false,
            },
        }
    }

    pub fn extract(&self, motions: &[MotionSequence], provenance: Provenance) -> Result<FeatureSet> {
        let x = pooled_matrix(motions)?;
        let values = match self {
            Self::RandomProjection { matrix, .. } => {
                if x.shape()[1] != matrix.shape()[0] {
                    return Err(Error::shape(
                        "extract_features",
                        format!("pooled width {} vs projection {:?}", x.shape()[1], matrix.shape()),
                    ));
                }
                x.matmul2(matrix)?
            }
            Self::TrainedEncoder {
                params,
                input_mean,
                input_std,
            } => {
                if x.shape()[1] != input_mean.len() {
                    return Err(Error::shape("extract_features", "encoder trained on another layout"));
                }
                let xs = standardize(&x, input_mean, input_std);
                let mut tape = Tape::new();
                let vars = params.bind(&mut tape);
                let input = tape.input("pooled", xs);
                let code = encode(&mut tape, &vars, input)?;
                tape.value(code).clone()
            }
        };
        FeatureSet::new(values, provenance)
    }
}

fn standardize(x: &DenseArray, mean: &[f64], std: &[f64]) -> DenseArray {
    let w = mean.len();
    let mut out = x.clone();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let c = i % w;
        *v = (*v - mean[c]) / std[c];
    }
    out
}

fn encode(tape: &mut Tape, vars: &HashMap<String, Var>, input: Var) -> Result<Var> {
    let h = tape.affine(input, vars["enc1.w"], vars["enc1.b"])?;
    let h = tape.gelu(h);
    tape.affine(h, vars["enc2.w"], vars["enc2.b"])
}

/// Mean feature of each label's ground-truth motions, used as that label's "text" feature.
pub fn label_centroids(features: &FeatureSet, labels: &[usize], classes: usize) -> Result<DenseArray> {
    if labels.len() != features.len() {
        return Err(Error::shape("label_centroids", format!("{} labels for {} rows", labels.len(), features.len())));
    }
    let f = features.dim();
    let mut sums = vec![0.0; classes * f];
    let mut counts = vec![0usize; classes];
    for (i, &k) in labels.iter().enumerate() {
        if k >= classes {
            return Err(Error::InvalidArgument(format!("label {k} out of range for {classes} classes")));
        }
        counts[k] += 1;
        for (s, v) in sums[k * f..(k + 1) * f].iter_mut().zip(features.row(i)) {
            *s += v;
        }
    }
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidArgument(format!("label {k} has no ground-truth motions")));
    }
    for (k, &c) in counts.iter().enumerate() {
        sums[k * f..(k + 1) * f].iter_mut().for_each(|s| *s /= c as f64);
    }
    DenseArray::new(vec![classes, f], sums)
}
