//! Sample quality against the number of function evaluations, for each solver.

use motion_flow::metrics::FeatureExtractor;
use motion_flow::motion::{gen_synthetic_dataset, DatasetFamily, SyntheticDatasetSpec};
use motion_flow::net::ModelConfig;
use motion_flow::pipeline::{balanced_labels, nfe_csv, nfe_curve, Generator};
use motion_flow::sampler::{SamplerConfig, Solver};
use motion_flow::training::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let mut spec = SyntheticDatasetSpec::new(DatasetFamily::GaussianShift, 2, 8, 2, 200, 1);
    spec.sigma = 0.25;
    let data = gen_synthetic_dataset(&spec)?;
    spec.seed = 2;
    let held = gen_synthetic_dataset(&spec)?;
    let model = ModelConfig::mlp(data[0].dim(), 8, 2, 128, 2);
    let cfg = TrainConfig {
        steps: 800,
        lr: 1e-3,
        ..TrainConfig::default()
    };
    let (ckpt, _) = train(&data, model, &cfg)?.into_result()?;
    let generator = Generator::from_checkpoint(&ckpt);
    let extractor = FeatureExtractor::random_projection(ckpt.layout.dim(), 16, 0)?;
    let labels = balanced_labels(held.len(), 2);
    for solver in [Solver::Euler, Solver::Midpoint, Solver::Rk4] {
        let sampler = SamplerConfig {
            solver,
            seed: 5,
            ..SamplerConfig::default()
        };
        let rows = nfe_curve(&generator, &held, &extractor, &[1, 2, 5, 10, 20], &labels, &sampler)?;
        println!("{solver:?}\n{}", nfe_csv(&rows));
    }
    Ok(())
}
