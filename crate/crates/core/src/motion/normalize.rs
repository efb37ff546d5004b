use serde::{Deserialize, Serialize};

use super::sequence::MotionSequence;
use crate::error::{Error, Result};
use crate::numerics::DenseArray;

/// Channels whose spread falls below this are left unscaled.
const MIN_STD: f64 = 1e-6;

/// Per-channel standardization statistics computed over every frame of a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn fit(motions: &[MotionSequence]) -> Result<Self> {
        let first = motions
            .first()
            .ok_or_else(|| Error::InvalidArgument("cannot fit normalizer on empty set".into()))?;
        let dim = first.dim();
        let mut sum = vec![0.0; dim];
        let mut count = 0usize;
        for m in motions {
            for f in 0..m.frames() {
                for (s, v) in sum.iter_mut().zip(m.frame(f)) {
                    *s += v;
                }
                count += 1;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut sq = vec![0.0; dim];
        for m in motions {
            for f in 0..m.frames() {
                for ((s, v), mu) in sq.iter_mut().zip(m.frame(f)).zip(&mean) {
                    *s += (v - mu) * (v - mu);
                }
            }
        }
        let std = sq
            .iter()
            .map(|s| {
                let sd = (s / count as f64).sqrt();
                if sd < MIN_STD {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Maps a `[..., D]` array into model space.
    pub fn normalize(&self, x: &DenseArray) -> DenseArray {
        self.apply(x, |v, mu, sd| (v - mu) / sd)
    }

    /// Maps a `[..., D]` array from model space back to features.
    pub fn denormalize(&self, x: &DenseArray) -> DenseArray {
        self.apply(x, |v, mu, sd| v * sd + mu)
    }

    fn apply(&self, x: &DenseArray, f: impl Fn(f64, f64, f64) -> f64) -> DenseArray {
        let d = self.dim();
        debug_assert_eq!(x.shape().last().copied(), Some(d));
        let mut out = x.clone();
        for row in out.data_mut().chunks_mut(d) {
            for ((v, mu), sd) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = f(*v, *mu, *sd);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::PoseLayout;

    #[test]
    fn standardizes_and_inverts() {
        let layout = PoseLayout::new(2).unwrap();
        let a = DenseArray::new(vec![2, 23], (0..46).map(|i| i as f64).collect()).unwrap();
        let b = a.map(|v| 3.0 * v - 1.0);
        let motions = vec![
            MotionSequence::new(layout, a.clone(), None).unwrap(),
            MotionSequence::new(layout, b, None).unwrap(),
        ];
        let n = Normalizer::fit(&motions).unwrap();
        let z = n.normalize(&a);
        assert!(n.denormalize(&z).max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn constant_channels_keep_unit_scale() {
        let layout = PoseLayout::new(2).unwrap();
        let m = MotionSequence::new(layout, DenseArray::full(&[3, 23], 2.0), None).unwrap();
        let n = Normalizer::fit(&[m]).unwrap();
        assert!(n.std.iter().all(|&s| s == 1.0));
        assert!(n.mean.iter().all(|&s| s == 2.0));
    }
}
