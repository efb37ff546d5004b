//! The metric formulas over feature sets and decoded joint positions.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::FeatureSet;
use crate::error::{Error, Result};
use crate::motion::MotionSequence;
use crate::numerics::linalg::{matrix_sqrt_psd, trace};
use crate::numerics::DenseArray;

pub const DIVERSITY_PAIRS: usize = 300;
pub const MMODALITY_SUBSET: usize = 10;
pub const R_PRECISION_BATCH: usize = 32;
pub const R_PRECISION_TOP: usize = 3;

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean and unbiased `(n − 1)` covariance of the rows.
pub fn mean_and_covariance(f: &FeatureSet) -> Result<(Vec<f64>, DenseArray)> {
    let (n, d) = (f.len(), f.dim());
    if n < 2 {
        return Err(Error::InvalidArgument(format!("covariance needs at least 2 rows, got {n}")));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(f.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut centered = Vec::with_capacity(n * d);
    for i in 0..n {
        centered.extend(f.row(i).iter().zip(&mean).map(|(v, m)| v - m));
    }
    let c = DenseArray::new(vec![n, d], centered)?;
    let cov = c.transpose2().matmul2(&c)?.scale(1.0 / (n - 1) as f64);
    Ok((mean, cov))
}

/// Fréchet distance between two Gaussians given by mean and covariance.
///
/// The cross term uses `Tr((Σa^{1/2} Σb Σa^{1/2})^{1/2})`, which equals
/// `Tr((Σa Σb)^{1/2})` for PSD inputs.
pub fn frechet_distance(mu_a: &[f64], cov_a: &DenseArray, mu_b: &[f64], cov_b: &DenseArray) -> Result<f64> {
    if mu_a.len() != mu_b.len() || cov_a.shape() != cov_b.shape() || cov_a.shape() != [mu_a.len(), mu_a.len()] {
        return Err(Error::shape("fid", format!("means {}/{} and covariances {:?}/{:?}", mu_a.len(), mu_b.len(), cov_a.shape(), cov_b.shape())));
    }
    let mean_term: f64 = mu_a.iter().zip(mu_b).map(|(a, b)| (a - b) * (a - b)).sum();
    let root_a = matrix_sqrt_psd(cov_a)?;
    let inner = root_a.matmul2(cov_b)?.matmul2(&root_a)?;
    let cross = trace(&matrix_sqrt_psd(&inner)?);
    Ok((mean_term + trace(cov_a) + trace(cov_b) - 2.0 * cross).max(0.0))
}

pub fn fid(a: &FeatureSet, b: &FeatureSet) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::shape("fid", format!("feature widths {} and {}", a.dim(), b.dim())));
    }
    let (mu_a, cov_a) = mean_and_covariance(a)?;
    let (mu_b, cov_b) = mean_and_covariance(b)?;
    frechet_distance(&mu_a, &cov_a, &mu_b, &cov_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityResult {
    pub value: f64,
    /// Pairs actually used; below the requested count when the set is small.
    pub pairs: usize,
}

/// Mean distance over `s_dis` disjoint pairs drawn without replacement. With
/// fewer than `2 s_dis` rows every row is used, in `⌊n/2⌋` pairs.
pub fn diversity<R: Rng + ?Sized>(f: &FeatureSet, s_dis: usize, rng: &mut R) -> Result<DiversityResult> {
    let n = f.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("diversity needs at least 2 rows, got {n}")));
    }
    if s_dis == 0 {
        return Err(Error::InvalidArgument("s_dis must be positive".into()));
    }
    let pairs = s_dis.min(n / 2);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (a, b) = (&order[..pairs], &order[pairs..2 * pairs]);
    Ok(DiversityResult {
        value: diversity_of_pairs(f, a, b),
        pairs,
    })
}

/// Mean distance between rows `a[i]` and `b[i]`.
pub fn diversity_of_pairs(f: &FeatureSet, a: &[usize], b: &[usize]) -> f64 {
    let total: f64 = a.iter().zip(b).map(|(&i, &j)| distance(f.row(i), f.row(j))).sum();
    total / a.len() as f64
}

/// Mean distance between matched rows.
pub fn mm_dist(pred: &FeatureSet, text: &FeatureSet) -> Result<f64> {
    if pred.len() != text.len() || pred.dim() != text.dim() {
        return Err(Error::shape(
            "mm_dist",
            format!("{}x{} vs {}x{}", pred.len(), pred.dim(), text.len(), text.dim()),
        ));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("mm_dist needs at least one pair".into()));
    }
    let total: f64 = (0..pred.len()).map(|i| distance(pred.row(i), text.row(i))).sum();
    Ok(total / pred.len() as f64)
}

/// Per condition, the mean distance between two disjoint random subsets of
/// [`MMODALITY_SUBSET`] generations, averaged over conditions.
pub fn mmodality<R: Rng + ?Sized>(groups: &[FeatureSet], rng: &mut R) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::InvalidArgument("mmodality needs at least one condition".into()));
    }
    let mut total = 0.0;
    for g in groups {
        if g.len() < 2 * MMODALITY_SUBSET {
            return Err(Error::InvalidArgument(format!(
                "mmodality needs {} generations per condition, got {}",
                2 * MMODALITY_SUBSET,
                g.len()
            )));
        }
        let mut order: Vec<usize> = (0..g.len()).collect();
        order.shuffle(rng);
        let (a, b) = order.split_at(MMODALITY_SUBSET);
        total += (0..MMODALITY_SUBSET).map(|j| distance(g.row(a[j]), g.row(b[j]))).sum::<f64>();
    }
    Ok(total / (MMODALITY_SUBSET * groups.len()) as f64)
}

/// Top-3 retrieval accuracy of matched text features among batches of 32.
///
/// Rows are shuffled, then split into full batches (a remainder is dropped).
/// Distances are ranked with a stable sort, so ties go to the lower index.
pub fn r_precision_top3<R: Rng + ?Sized>(pred: &FeatureSet, text: &FeatureSet, rng: &mut R) -> Result<f64> {
    if pred.len() != text.len() || pred.dim() != text.dim() {
        return Err(Error::shape("r_precision", format!("{} vs {} pairs", pred.len(), text.len())));
    }
    if pred.len() < R_PRECISION_BATCH {
        return Err(Error::InvalidArgument(format!(
            "r-precision needs at least {R_PRECISION_BATCH} pairs, got {}",
            pred.len()
        )));
    }
    let mut order: Vec<usize> = (0..pred.len()).collect();
    order.shuffle(rng);
    let mut hits = 0usize;
    let mut total = 0usize;
    for batch in order.chunks_exact(R_PRECISION_BATCH) {
        for (pos, &i) in batch.iter().enumerate() {
            if top_k_contains(pred.row(i), text, batch, pos, R_PRECISION_TOP) {
                hits += 1;
            }
            total += 1;
        }
    }
    Ok(hits as f64 / total as f64)
}

/// Whether candidate `target` (a position within `batch`) ranks in the `k` nearest.
fn top_k_contains(query: &[f64], text: &FeatureSet, batch: &[usize], target: usize, k: usize) -> bool {
    let dists: Vec<f64> = batch.iter().map(|&j| distance(query, text.row(j))).collect();
    let mut ranked: Vec<usize> = (0..batch.len()).collect();
    ranked.sort_by(|&a, &b| dists[a].total_cmp(&dists[b]));
    ranked[..k].contains(&target)
}

/// Average and final displacement errors over the non-root joint positions of
/// `frames` (the final frame is the last listed).
pub fn ade_fde(pred: &MotionSequence, gt: &MotionSequence, frames: &[usize]) -> Result<(f64, f64)> {
    if pred.frames() != gt.frames() || pred.dim() != gt.dim() || pred.layout() != gt.layout() {
        return Err(Error::shape(
            "ade_fde",
            format!("{}x{} vs {}x{}", pred.frames(), pred.dim(), gt.frames(), gt.dim()),
        ));
    }
    let last = *frames
        .last()
        .ok_or_else(|| Error::InvalidArgument("ade/fde region is empty".into()))?;
    if let Some(&bad) = frames.iter().find(|&&f| f >= pred.frames()) {
        return Err(Error::InvalidArgument(format!("frame {bad} out of range")));
    }
    let frame_error = |f: usize| -> f64 {
        let (p, g) = (pred.joint_positions(f), gt.joint_positions(f));
        p.iter().zip(&g).map(|(a, b)| distance(a, b)).sum::<f64>() / p.len() as f64
    };
    let ade = frames.iter().map(|&f| frame_error(f)).sum::<f64>() / frames.len() as f64;
    Ok((ade, frame_error(last)))
}
