//! Pose layouts, synthetic datasets, normalization and the motion file format.

use motion_flow::motion::{
    feature_dim, gen_synthetic_dataset, read_motion_dir, write_motion_dir, DatasetFamily, Normalizer,
    SyntheticDatasetSpec,
};

fn main() -> motion_flow::Result<()> {
    for joints in [21, 22] {
        println!("{joints} joints -> {} features per frame", feature_dim(joints)?);
    }

    let spec = SyntheticDatasetSpec::new(DatasetFamily::SineWalker, 4, 24, 3, 5, 11);
    let motions = gen_synthetic_dataset(&spec)?;
    let layout = motions[0].layout();
    println!(
        "{} motions, {} frames x {} dims; positions at {:?}, foot contacts at {:?}",
        motions.len(),
        motions[0].frames(),
        layout.dim(),
        layout.positions(),
        layout.foot_contacts()
    );
    println!("joint 2 of frame 0: {:?}", motions[0].joint_positions(0)[2]);

    let norm = Normalizer::fit(&motions)?;
    let z = norm.normalize(motions[0].values());
    println!("round trip error {:.1e}", norm.denormalize(&z).max_abs_diff(motions[0].values()));

    let dir = std::env::temp_dir().join("mfm-example-motions");
    let _ = std::fs::remove_dir_all(&dir);
    write_motion_dir(&dir, &motions)?;
    let back = read_motion_dir(&dir)?;
    println!("read back {} files, identical: {}", back.len(), back == motions);
    Ok(())
}
