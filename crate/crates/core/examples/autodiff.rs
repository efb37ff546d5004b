//! Reverse-mode gradients of a two-layer network checked against central differences.

use motion_flow::numerics::{DenseArray, Tape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn loss(w1: &DenseArray, w2: &DenseArray, x: &DenseArray) -> motion_flow::Result<(f64, Option<[DenseArray; 2]>)> {
    let mut tape = Tape::new();
    let xv = tape.input("x", x.clone());
    let a = tape.param("w1", w1.clone());
    let b = tape.param("w2", w2.clone());
    let h = tape.matmul(xv, a)?;
    let h = tape.tanh(h);
    let y = tape.matmul(h, b)?;
    let y = tape.square(y);
    let out = tape.mean(y);
    let (value, grads) = tape.forward_backward(out)?;
    let g = [grads.get("w1").cloned().unwrap(), grads.get("w2").cloned().unwrap()];
    Ok((value, Some(g)))
}

fn main() -> motion_flow::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = DenseArray::randn(&[5, 3], &mut rng);
    let w1 = DenseArray::randn(&[3, 4], &mut rng);
    let w2 = DenseArray::randn(&[4, 2], &mut rng);
    let (value, grads) = loss(&w1, &w2, &x)?;
    let [g1, _] = grads.unwrap();
    println!("loss = {value:.6}");

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..w1.len() {
        let mut plus = w1.clone();
        plus.data_mut()[i] += h;
        let mut minus = w1.clone();
        minus.data_mut()[i] -= h;
        let fd = (loss(&plus, &w2, &x)?.0 - loss(&minus, &w2, &x)?.0) / (2.0 * h);
        let rel = (fd - g1.data()[i]).abs() / fd.abs().max(1e-8);
        worst = worst.max(rel);
    }
    println!("worst relative error over w1: {worst:.2e}");
    Ok(())
}
