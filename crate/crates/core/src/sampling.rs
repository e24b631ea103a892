//! Random orthogonal matrices and m-orthonormal frames.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::space::MeasureSpace;

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Orthonormal columns from the QR factor of a Gaussian matrix, with the
/// sign convention `diag(R) > 0` so the result is Haar distributed.
fn orthonormal_columns<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// A Haar-random `k × k` orthogonal matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DMatrix<f64> {
    orthonormal_columns(k, k, rng)
}

/// `k` random vectors, orthonormal in `⟨·,·⟩_m`, as the columns of a
/// `d × k` matrix.
pub fn random_frame<R: Rng + ?Sized>(space: &MeasureSpace, k: usize, rng: &mut R) -> DMatrix<f64> {
    let q = orthonormal_columns(space.dim(), k, rng);
    let s: DVector<f64> = space.sqrt_weights();
    DMatrix::from_fn(q.nrows(), k, |i, j| q[(i, j)] / s[i])
}
