//! Symmetric positive semi-definite matrix square root.

use nalgebra::DMatrix;

use super::array::DenseArray;
use crate::error::{Error, Result};

/// Eigenvalues below this are treated as a genuine loss of definiteness.
pub const PSD_TOLERANCE: f64 = 1e-6;

fn to_matrix(a: &DenseArray) -> Result<DMatrix<f64>> {
    if a.rank() != 2 || a.shape()[0] != a.shape()[1] {
        return Err(Error::shape("matrix_sqrt_psd", format!("expected square matrix, got {:?}", a.shape())));
    }
    let n = a.shape()[0];
    Ok(DMatrix::from_row_slice(n, n, a.data()))
}

fn from_matrix(m: &DMatrix<f64>) -> DenseArray {
    let n = m.nrows();
    let mut data = Vec::with_capacity(n * m.ncols());
    for i in 0..n {
        for j in 0..m.ncols() {
            data.push(m[(i, j)]);
        }
    }
    DenseArray::from_parts(vec![n, m.ncols()], data)
}

/// Eigenvalues of the symmetrized matrix, ascending.
pub fn symmetric_eigenvalues(a: &DenseArray) -> Result<Vec<f64>> {
    let m = to_matrix(a)?;
    let sym = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Principal square root of a symmetric PSD matrix via eigendecomposition.
///
/// The input is symmetrized first. Eigenvalues in `[-PSD_TOLERANCE, 0)` are
/// clamped to zero; anything more negative is rejected.
pub fn matrix_sqrt_psd(a: &DenseArray) -> Result<DenseArray> {
    let m = to_matrix(a)?;
    if !a.is_finite() {
        return Err(Error::InvalidArgument("matrix_sqrt_psd: non-finite input".into()));
    }
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let b = v * DMatrix::from_diagonal(&roots) * v.transpose();
    let b = (&b + b.transpose()) * 0.5;
    Ok(from_matrix(&b))
}

/// Trace of a square matrix.
pub fn trace(a: &DenseArray) -> f64 {
    let n = a.shape()[0];
    (0..n).map(|i| a.get2(i, i)).sum()
}

pub fn frobenius(a: &DenseArray) -> f64 {
    a.norm()
}
