//! Seeded generators shared by the integration suites. Kept independent of
//! the library's internals so oracle computations do not lean on the code
//! they check.
#![allow(dead_code)] // each test binary uses its own subset

use mshosvd::tensor::{DenseTensor, Matrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    let n: usize = shape.iter().product();
    DenseTensor::new(shape.to_vec(), (0..n).map(|_| gaussian(rng)).collect()).unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_col_major(rows, cols, (0..rows * cols).map(|_| gaussian(rng)).collect()).unwrap()
}

/// Random matrix with orthonormal columns via modified Gram-Schmidt.
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    assert!(cols <= rows);
    let mut out = Matrix::zeros(rows, cols);
    for j in 0..cols {
        loop {
            let mut w: Vec<f64> = (0..rows).map(|_| gaussian(rng)).collect();
            for k in 0..j {
                let dot: f64 = (0..rows).map(|i| w[i] * out.get(i, k)).sum();
                for (i, wi) in w.iter_mut().enumerate() {
                    *wi -= dot * out.get(i, k);
                }
            }
            let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for (i, wi) in w.iter().enumerate() {
                    out.set(i, j, wi / norm);
                }
                break;
            }
        }
    }
    out
}

/// Orthogonal projector onto the column span.
pub fn projector(u: &Matrix) -> Matrix {
    u.matmul(&u.transpose()).unwrap()
}

/// `I - P` for a square matrix `P`.
pub fn complement(p: &Matrix) -> Matrix {
    let n = p.rows();
    let mut out = Matrix::identity(n);
    for j in 0..n {
        for i in 0..n {
            out.set(i, j, out.get(i, j) - p.get(i, j));
        }
    }
    out
}

pub fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
    let mut k = Matrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ja in 0..a.cols() {
        for ia in 0..a.rows() {
            let v = a.get(ia, ja);
            for jb in 0..b.cols() {
                for ib in 0..b.rows() {
                    k.set(ia * b.rows() + ib, ja * b.cols() + jb, v * b.get(ib, jb));
                }
            }
        }
    }
    k
}

pub fn relative_gap(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.subtract(b).unwrap().norm() / (1.0 + b.norm())
}
