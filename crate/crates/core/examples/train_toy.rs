//! Conditional flow matching on the two-class Gaussian toy set, then saving a checkpoint.
//!
//! `cargo run --release --example train_toy -- [steps]`

use motion_flow::motion::{gen_synthetic_dataset, DatasetFamily, SyntheticDatasetSpec};
use motion_flow::net::{Checkpoint, ModelConfig};
use motion_flow::training::{moving_average, train_with_progress, TrainConfig};

fn main() -> anyhow::Result<()> {
    let steps = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(600);
    let mut spec = SyntheticDatasetSpec::new(DatasetFamily::GaussianShift, 2, 8, 2, 200, 1);
    spec.sigma = 0.25;
    let data = gen_synthetic_dataset(&spec)?;

    let model = ModelConfig::mlp(data[0].dim(), 8, 2, 128, 2);
    let config = TrainConfig {
        steps,
        lr: 1e-3,
        batch_size: 64,
        ..TrainConfig::default()
    };
    let outcome = train_with_progress(&data, model, &config, |row| {
        if row.step % 100 == 0 {
            println!("step {:>5}  loss {:.4}", row.step, row.loss);
        }
    })?;
    let ma = moving_average(&outcome.log, 100);
    println!("moving-average loss {:.4} -> {:.4}", ma[0], ma[ma.len() - 1]);

    let (checkpoint, _) = outcome.into_result()?;
    let dir = std::env::temp_dir().join("mfm-example-ckpt");
    checkpoint.save(&dir)?;
    let back = Checkpoint::load(&dir)?;
    println!("saved to {}; reload identical: {}", dir.display(), back == checkpoint);
    Ok(())
}
