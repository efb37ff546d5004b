//! Training-free editing by rewriting the sampling trajectory.
//!
//! Trains a small model on sine-walker motions, then completes held-out motions
//! from their first third and compares rewriting thresholds.

use motion_flow::editing::{build_mask, EditConfig, EditTask, MaskParams};
use motion_flow::motion::{gen_synthetic_dataset, DatasetFamily, SyntheticDatasetSpec};
use motion_flow::net::ModelConfig;
use motion_flow::pipeline::{edit_errors, edit_motions, Generator};
use motion_flow::training::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let frames = 24;
    let spec = SyntheticDatasetSpec::new(DatasetFamily::SineWalker, 4, frames, 4, 100, 1);
    let data = gen_synthetic_dataset(&spec)?;
    let held = gen_synthetic_dataset(&SyntheticDatasetSpec {
        seed: 2,
        samples_per_class: 16,
        ..spec.clone()
    })?;
    let layout = data[0].layout();

    for task in [EditTask::InBetween, EditTask::Prediction, EditTask::Interpolation, EditTask::UpperBody] {
        let params = MaskParams {
            frames,
            prefix_frames: 6,
            suffix_frames: 6,
            stride: 4,
            ..MaskParams::default()
        };
        let mask = build_mask(task, layout, &params)?;
        println!("{task:?}: {} of {} entries known", mask.known_count(), frames * layout.dim());
    }

    let model = ModelConfig::mlp(layout.dim(), frames, 4, 256, 2);
    let cfg = TrainConfig {
        steps: 600,
        lr: 1e-3,
        batch_size: 32,
        ..TrainConfig::default()
    };
    let (ckpt, _) = train(&data, model, &cfg)?.into_result()?;
    let generator = Generator::from_checkpoint(&ckpt);

    let mask = build_mask(
        EditTask::Prediction,
        layout,
        &MaskParams {
            frames,
            prefix_frames: frames / 3,
            ..MaskParams::default()
        },
    )?;
    for threshold in [0.0, 0.2, 1.0] {
        let config = EditConfig {
            threshold,
            ..EditConfig::default()
        };
        let edited = edit_motions(&generator, &held, &mask, &config)?;
        let (ade, fde) = edit_errors(&edited, &held, &mask)?;
        println!("threshold {threshold:.1}: ADE {ade:.4}  FDE {fde:.4}");
    }
    Ok(())
}
