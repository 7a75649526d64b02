//! Seeded random generators and assertion helpers shared by unit tests.

use crate::rand_util::gaussian;
use crate::tensor::{DenseTensor, Matrix};
use rand::Rng;

pub fn random_tensor(shape: &[usize], rng: &mut impl Rng) -> DenseTensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| gaussian(rng)).collect();
    DenseTensor::new(shape.to_vec(), data).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| gaussian(rng)).collect();
    Matrix::from_col_major(rows, cols, data).unwrap()
}

/// Random matrix with orthonormal columns (rows >= cols).
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    let m = random_matrix(rows, cols, rng);
    crate::linalg::orthonormalize_columns(&m)
}

pub fn assert_close(a: &DenseTensor, b: &DenseTensor, tol: f64) {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    let scale = 1.0 + b.norm();
    let diff = a.subtract(b).unwrap().norm();
    assert!(
        diff <= tol * scale,
        "tensors differ: |a-b| = {diff:e}, tolerance {:e}",
        tol * scale
    );
}

pub fn assert_matrix_close(a: &Matrix, b: &Matrix, tol: f64) {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()), "shape mismatch");
    let scale = 1.0 + b.frobenius_norm();
    let diff: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(
        diff <= tol * scale,
        "matrices differ: |a-b|_F = {diff:e}, tolerance {:e}",
        tol * scale
    );
}
