//! The evaluation harness: FID, diversity, multimodal distance, R-precision and
//! MModality, each repeated and reported as mean with a 95% interval.

use motion_flow::metrics::FeatureExtractor;
use motion_flow::motion::{gen_synthetic_dataset, DatasetFamily, SyntheticDatasetSpec};
use motion_flow::net::ModelConfig;
use motion_flow::pipeline::{evaluate, EvalConfig, Generator};
use motion_flow::training::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let spec = SyntheticDatasetSpec::new(DatasetFamily::GaussianShift, 2, 8, 4, 100, 1);
    let data = gen_synthetic_dataset(&spec)?;
    let model = ModelConfig::mlp(data[0].dim(), 8, 4, 128, 2);
    let cfg = TrainConfig {
        steps: 600,
        lr: 1e-3,
        ..TrainConfig::default()
    };
    let (ckpt, _) = train(&data, model, &cfg)?.into_result()?;

    let extractor = FeatureExtractor::random_projection(ckpt.layout.dim(), 16, 0)?;
    let config = EvalConfig {
        samples: 128,
        repetitions: 5,
        ..EvalConfig::default()
    };
    let report = evaluate(&Generator::from_checkpoint(&ckpt), &data, 4, &extractor, &config)?;
    for (name, entry) in &report.metrics {
        println!("{name:<18} {:.4} ± {:.4}", entry.mean, entry.ci95);
    }
    Ok(())
}
