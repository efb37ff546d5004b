//! Classifier-free guidance: the combination rule and its effect on a small trained model.

use motion_flow::metrics::{fid, FeatureExtractor, Provenance};
use motion_flow::motion::{gen_synthetic_dataset, DatasetFamily, SyntheticDatasetSpec};
use motion_flow::net::ModelConfig;
use motion_flow::numerics::DenseArray;
use motion_flow::pipeline::{balanced_labels, Generator};
use motion_flow::sampler::{guided_combination, SamplerConfig};
use motion_flow::training::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let vc = DenseArray::new(vec![3], vec![1.0, 2.0, 3.0])?;
    let vn = DenseArray::new(vec![3], vec![0.5, 0.0, -1.0])?;
    for s in [0.0, 1.0, 3.0] {
        println!("s={s}: {:?}", guided_combination(&vc, &vn, s)?.data());
    }

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
    let reference = extractor.extract(&held, Provenance::Gt)?;
    let labels = balanced_labels(held.len(), 2);
    for s in [0.0, 1.0, 2.0, 3.0, 5.0] {
        let sampler = SamplerConfig {
            guidance: s,
            seed: 3,
            ..SamplerConfig::default()
        };
        let generated = extractor.extract(&generator.generate(&labels, &sampler)?, Provenance::Pred)?;
        println!("guidance {s:<4} FID {:.4}", fid(&generated, &reference)?);
    }
    Ok(())
}
