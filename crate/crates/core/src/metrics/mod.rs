//! Evaluation metrics over a deterministic feature extractor.

mod features;
mod report;
mod scores;

pub use features::{
    label_centroids, pooled_statistics, EncoderConfig, ExtractorInfo, FeatureExtractor, FeatureSet, Provenance,
};
pub use report::{repeat, MetricEntry, MetricsReport, Summary, DEFAULT_REPETITIONS};
pub use scores::{
    ade_fde, diversity, diversity_of_pairs, fid, frechet_distance, mean_and_covariance, mm_dist, mmodality,
    r_precision_top3, DiversityResult, DIVERSITY_PAIRS, MMODALITY_SUBSET, R_PRECISION_BATCH, R_PRECISION_TOP,
};
