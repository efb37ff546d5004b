//! Seeded runs are bit-identical; manifests record seeds, config and a checkpoint hash.

use motion_flow::manifest::{checkpoint_hash, RunManifest, MANIFEST_FILE};
use motion_flow::motion::{gen_synthetic_dataset, DatasetFamily, SyntheticDatasetSpec};
use motion_flow::net::ModelConfig;
use motion_flow::training::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let spec = SyntheticDatasetSpec::new(DatasetFamily::GaussianShift, 2, 8, 2, 50, 3);
    let data = gen_synthetic_dataset(&spec)?;
    let model = ModelConfig::mlp(data[0].dim(), 8, 2, 64, 1);
    let cfg = TrainConfig {
        steps: 50,
        seed: 42,
        ..TrainConfig::default()
    };

    let root = std::env::temp_dir().join("mfm-example-repro");
    let mut hashes = Vec::new();
    for run in 0..2 {
        let (ckpt, log) = train(&data, model.clone(), &cfg)?.into_result()?;
        let dir = root.join(format!("run{run}"));
        ckpt.save(&dir)?;
        let mut manifest = RunManifest::new("train", std::env::args().collect());
        manifest.config = serde_json::to_value(&cfg)?;
        manifest.seeds.insert("train".into(), cfg.seed);
        manifest.checkpoint_sha256 = Some(checkpoint_hash(&dir)?);
        manifest.write(&dir.join(MANIFEST_FILE))?;
        println!("run {run}: final loss {:.6}, weights {}", log[log.len() - 1].loss, manifest.checkpoint_sha256.as_deref().unwrap_or(""));
        hashes.push(manifest.checkpoint_sha256);
    }
    println!("identical: {}", hashes[0] == hashes[1]);
    Ok(())
}
