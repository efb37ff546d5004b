//! Fréchet distance between Gaussian fits, with the PSD square root it relies on.

use motion_flow::metrics::{fid, frechet_distance, FeatureSet, Provenance};
use motion_flow::numerics::{matrix_sqrt_psd, DenseArray};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> motion_flow::Result<()> {
    let a = DenseArray::new(vec![2, 2], vec![4.0, 1.0, 1.0, 3.0])?;
    let r = matrix_sqrt_psd(&a)?;
    println!("sqrt(A)^2 - A max error: {:.1e}", r.matmul2(&r)?.max_abs_diff(&a));

    // Unit mean shift, plus tr(I + 4I - 2*sqrt(4I)) = 4 from the covariances.
    let i = DenseArray::identity(4);
    let closed = frechet_distance(&[0.0; 4], &i, &[1.0, 0.0, 0.0, 0.0], &i.scale(4.0))?;
    println!("closed form: {closed:.6} (expected {})", 1.0 + 4.0);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 5000;
    let x = DenseArray::randn(&[n, 8], &mut rng);
    let y = DenseArray::randn(&[n, 8], &mut rng).map(|v| v + 5.0 / 8f64.sqrt());
    let fx = FeatureSet::new(x, Provenance::Gt)?;
    let fy = FeatureSet::new(y, Provenance::Pred)?;
    println!("sampled shift of norm 5: FID {:.3} (population value 25)", fid(&fx, &fy)?);
    Ok(())
}
