//! End-to-end routines shared by the command-line tool and the examples:
//! batch generation, the evaluation protocol, FID-vs-NFE and guidance curves.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::editing::{rewrite_sample, EditConfig, EditMask};
use crate::error::{Error, Result};
use crate::metrics::{
    ade_fde, diversity, fid, label_centroids, mm_dist, mmodality, r_precision_top3, FeatureExtractor,
    FeatureSet, MetricsReport, Provenance, Summary, DIVERSITY_PAIRS,
};
use crate::motion::{MotionSequence, Normalizer, PoseLayout};
use crate::net::{Checkpoint, Condition};
use crate::numerics::DenseArray;
use crate::sampler::{draw_noise, integrate, GuidedField, SamplerConfig, VectorField};

/// Items integrated together; larger batches amortize per-operation overhead.
const GENERATION_BATCH: usize = 64;

/// A field together with the mapping from model space back to motion features.
pub struct Generator<'a, F> {
    pub field: &'a F,
    pub normalizer: &'a Normalizer,
    pub layout: PoseLayout,
    pub frames: usize,
}

impl<'a> Generator<'a, crate::net::VectorFieldModel> {
    pub fn from_checkpoint(ckpt: &'a Checkpoint) -> Self {
        Self {
            field: &ckpt.model,
            normalizer: &ckpt.normalizer,
            layout: ckpt.layout,
            frames: ckpt.model.config().frames,
        }
    }
}

impl<F: VectorField + Sync> Generator<'_, F> {
    /// Samples one motion per label. Noise for all items comes from one draw
    /// with `config.seed`, so item `i` does not depend on how items are batched.
    pub fn generate(&self, labels: &[Option<usize>], config: &SamplerConfig) -> Result<Vec<MotionSequence>> {
        config.validate()?;
        let d = self.layout.dim();
        let x0 = draw_noise(config.seed, &[labels.len(), self.frames, d]);
        let guided = GuidedField::new(self.field, config.guidance)?;
        let chunks: Vec<(usize, &[Option<usize>])> = labels.chunks(GENERATION_BATCH).enumerate().collect();
        let parts = chunks
            .into_par_iter()
            .map(|(chunk_idx, chunk)| -> Result<Vec<MotionSequence>> {
                let start = chunk_idx * GENERATION_BATCH;
                let items: Vec<DenseArray> = (start..start + chunk.len()).map(|i| x0.outer(i)).collect();
                let conditions: Vec<Condition> = chunk.iter().map(|&l| Condition::from_label(l)).collect();
                let traj = integrate(&guided, DenseArray::stack(&items)?, &conditions, config.solver, config.steps)?;
                let last = traj.last();
                chunk
                    .iter()
                    .enumerate()
                    .map(|(j, &label)| MotionSequence::new(self.layout, self.normalizer.denormalize(&last.outer(j)), label))
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?;
        let out: Vec<MotionSequence> = parts.into_iter().flatten().collect();
        Ok(out)
    }
}

/// Labels `0..classes` repeated until `n` items.
pub fn balanced_labels(n: usize, classes: usize) -> Vec<Option<usize>> {
    (0..n).map(|i| Some(i % classes.max(1))).collect()
}

/// Standard-normal motions in model space mapped back to feature space.
pub fn noise_motions(normalizer: &Normalizer, layout: PoseLayout, frames: usize, n: usize, seed: u64) -> Result<Vec<MotionSequence>> {
    let x = draw_noise(seed, &[n, frames, layout.dim()]);
    (0..n)
        .map(|i| MotionSequence::new(layout, normalizer.denormalize(&x.outer(i)), None))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub sampler: SamplerConfig,
    /// Generated motions per repetition for FID, Diversity, MM-Dist and R-Precision.
    pub samples: usize,
    /// Generations per condition for MModality.
    pub mm_generations: usize,
    pub repetitions: usize,
    pub feature_dim: usize,
    pub extractor_seed: u64,
    pub diversity_pairs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            sampler: SamplerConfig::default(),
            samples: 256,
            mm_generations: 30,
            repetitions: crate::metrics::DEFAULT_REPETITIONS,
            feature_dim: 16,
            extractor_seed: 0,
            diversity_pairs: DIVERSITY_PAIRS,
        }
    }
}

/// The full metric suite against labelled ground truth, repeated with fresh
/// sampling seeds `sampler.seed + rep`.
pub fn evaluate<F: VectorField + Sync>(
    generator: &Generator<'_, F>,
    gt: &[MotionSequence],
    classes: usize,
    extractor: &FeatureExtractor,
    config: &EvalConfig,
) -> Result<MetricsReport> {
    if config.repetitions == 0 {
        return Err(Error::InvalidConfig("repetitions must be positive".into()));
    }
    let gt_labels: Vec<usize> = gt
        .iter()
        .map(|m| m.condition().ok_or_else(|| Error::InvalidArgument("ground-truth motion has no label".into())))
        .collect::<Result<_>>()?;
    let gt_features = extractor.extract(gt, Provenance::Gt)?;
    let centroids = label_centroids(&gt_features, &gt_labels, classes)?;
    let text_for = |labels: &[Option<usize>]| -> Result<FeatureSet> {
        let rows: Vec<usize> = labels.iter().map(|l| l.unwrap_or(0)).collect();
        let all = FeatureSet::new(centroids.clone(), Provenance::Text)?;
        Ok(all.select(&rows))
    };

    let mut values: [Vec<f64>; 6] = Default::default();
    for rep in 0..config.repetitions {
        let mut sampler = config.sampler;
        sampler.seed = config.sampler.seed.wrapping_add(rep as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
        let labels = balanced_labels(config.samples, classes);
        let motions = generator.generate(&labels, &sampler)?;
        let pred = extractor.extract(&motions, Provenance::Pred)?;
        let text = text_for(&labels)?;
        values[0].push(fid(&pred, &gt_features)?);
        values[1].push(diversity(&pred, config.diversity_pairs, &mut rng)?.value);
        values[2].push(mm_dist(&pred, &text)?);
        values[3].push(r_precision_top3(&pred, &text, &mut rng)?);

        let mut groups = Vec::with_capacity(classes);
        for k in 0..classes {
            let mut mm_sampler = sampler;
            mm_sampler.seed = sampler.seed.wrapping_mul(31).wrapping_add(1 + k as u64);
            let gens = generator.generate(&vec![Some(k); config.mm_generations], &mm_sampler)?;
            groups.push(extractor.extract(&gens, Provenance::Pred)?);
        }
        values[4].push(mmodality(&groups, &mut rng)?);
        values[5].push(diversity(&gt_features, config.diversity_pairs, &mut rng)?.value);
    }
    let info = extractor.info();
    let mut report = MetricsReport::default();
    let names = ["fid", "diversity", "mm_dist", "r_precision_top3", "mmodality", "diversity_gt"];
    for (name, vals) in names.iter().zip(&values) {
        report.insert(name, Summary::from_values(vals), &info);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NfeRow {
    pub steps: usize,
    pub nfe: usize,
    pub fid: f64,
    pub avg_infer_seconds: f64,
}

/// FID of `samples` generated motions against `reference` for each step count.
/// Every row uses the same sampling seed.
pub fn nfe_curve<F: VectorField + Sync>(
    generator: &Generator<'_, F>,
    reference: &[MotionSequence],
    extractor: &FeatureExtractor,
    steps: &[usize],
    labels: &[Option<usize>],
    sampler: &SamplerConfig,
) -> Result<Vec<NfeRow>> {
    if steps.is_empty() {
        return Err(Error::InvalidArgument("steps list is empty".into()));
    }
    let reference = extractor.extract(reference, Provenance::Gt)?;
    let conditional = labels.iter().any(|l| l.is_some());
    steps
        .iter()
        .map(|&n| {
            let cfg = SamplerConfig { steps: n, ..*sampler };
            let start = Instant::now();
            let motions = generator.generate(labels, &cfg)?;
            let elapsed = start.elapsed().as_secs_f64();
            let pred = extractor.extract(&motions, Provenance::Pred)?;
            Ok(NfeRow {
                steps: n,
                nfe: crate::sampler::nfe(&cfg, conditional),
                fid: fid(&pred, &reference)?,
                avg_infer_seconds: elapsed / labels.len() as f64,
            })
        })
        .collect()
}

pub fn nfe_csv(rows: &[NfeRow]) -> String {
    let mut out = String::from("nfe,fid,avg_infer_seconds\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.nfe, r.fid, r.avg_infer_seconds);
    }
    out
}

/// Guidance strengths swept by [`guidance_sweep`] by default.
pub const GUIDANCE_SWEEP: [f64; 6] = [0.0, 1.0, 2.0, 2.5, 3.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceRow {
    pub guidance: f64,
    pub fid: f64,
    pub mm_dist: f64,
}

pub fn guidance_sweep<F: VectorField + Sync>(
    generator: &Generator<'_, F>,
    reference: &[MotionSequence],
    classes: usize,
    extractor: &FeatureExtractor,
    strengths: &[f64],
    samples: usize,
    sampler: &SamplerConfig,
) -> Result<Vec<GuidanceRow>> {
    let gt_labels: Vec<usize> = reference.iter().map(|m| m.condition().unwrap_or(0)).collect();
    let gt = extractor.extract(reference, Provenance::Gt)?;
    let centroids = FeatureSet::new(label_centroids(&gt, &gt_labels, classes)?, Provenance::Text)?;
    let labels = balanced_labels(samples, classes);
    let rows: Vec<usize> = labels.iter().map(|l| l.unwrap_or(0)).collect();
    let text = centroids.select(&rows);
    strengths
        .iter()
        .map(|&s| {
            let cfg = SamplerConfig { guidance: s, ..*sampler };
            let pred = extractor.extract(&generator.generate(&labels, &cfg)?, Provenance::Pred)?;
            Ok(GuidanceRow {
                guidance: s,
                fid: fid(&pred, &gt)?,
                mm_dist: mm_dist(&pred, &text)?,
            })
        })
        .collect()
}

pub fn guidance_csv(rows: &[GuidanceRow]) -> String {
    let mut out = String::from("guidance,fid,mm_dist\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.guidance, r.fid, r.mm_dist);
    }
    out
}

/// Edits every reference motion with the same mask. Chunk `c` of
/// [`GENERATION_BATCH`] motions uses seed `config.seed + c`.
pub fn edit_motions<F: VectorField + Sync>(
    generator: &Generator<'_, F>,
    references: &[MotionSequence],
    mask: &EditMask,
    config: &EditConfig,
) -> Result<Vec<MotionSequence>> {
    let chunks: Vec<(usize, &[MotionSequence])> = references.chunks(GENERATION_BATCH).enumerate().collect();
    let parts = chunks
        .into_par_iter()
        .map(|(c, chunk)| -> Result<Vec<MotionSequence>> {
            let x = DenseArray::stack(
                &chunk
                    .iter()
                    .map(|m| generator.normalizer.normalize(m.values()))
                    .collect::<Vec<_>>(),
            )?;
            let conditions: Vec<Condition> = chunk.iter().map(|m| Condition::from_label(m.condition())).collect();
            let cfg = EditConfig {
                seed: config.seed.wrapping_add(c as u64),
                ..*config
            };
            let traj = rewrite_sample(generator.field, &x, mask, &conditions, &cfg)?;
            let last = traj.last();
            chunk
                .iter()
                .enumerate()
                .map(|(j, m)| {
                    MotionSequence::new(generator.layout, generator.normalizer.denormalize(&last.outer(j)), m.condition())
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Mean ADE and FDE of `edited` against `references` over the frames that have unknown values.
pub fn edit_errors(edited: &[MotionSequence], references: &[MotionSequence], mask: &EditMask) -> Result<(f64, f64)> {
    if edited.len() != references.len() || edited.is_empty() {
        return Err(Error::InvalidArgument("edited and reference sets must match and be non-empty".into()));
    }
    let region = mask.unknown_frames();
    let mut sums = (0.0, 0.0);
    for (p, g) in edited.iter().zip(references) {
        let (a, f) = ade_fde(p, g, &region)?;
        sums.0 += a;
        sums.1 += f;
    }
    let n = edited.len() as f64;
    Ok((sums.0 / n, sums.1 / n))
}
