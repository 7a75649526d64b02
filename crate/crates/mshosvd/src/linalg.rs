//! Singular value decomposition and energy-threshold rank selection.
//!
//! The SVD is a one-sided Jacobi (Hestenes) implementation: rotations
//! orthogonalize the columns of the tall side of the input, the accumulated
//! rotations give the opposite factor, and column norms give the singular
//! values. No external numeric dependency, deterministic for a fixed input.

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Convergence threshold for column-pair inner products, relative to the
/// geometric mean of the column norms.
const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 200;

/// Economy SVD `A = U * diag(sigma) * V^T`.
///
/// `left` is `m x k` and `right` is `n x k` with `k = min(m, n)`; both have
/// orthonormal columns, and the singular values are sorted non-increasing.
/// The sign convention fixes the largest-magnitude entry of each left vector
/// (first such entry on ties) to be positive.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub left: Matrix,
    pub singular_values: Vec<f64>,
    pub right: Matrix,
}

impl SvdResult {
    /// `U * diag(sigma) * V^T`, mainly for residual checks.
    pub fn reconstruct(&self) -> Matrix {
        let m = self.left.rows();
        let n = self.right.rows();
        let mut out = Matrix::zeros(m, n);
        for (k, &s) in self.singular_values.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = s * self.right.get(j, k);
                for i in 0..m {
                    let v = out.get(i, j) + w * self.left.get(i, k);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

pub fn svd(a: &Matrix) -> Result<SvdResult> {
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::InvalidArgument("svd of an empty matrix".into()));
    }
    if a.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if a.rows() >= a.cols() {
        let (u, s, v) = svd_tall(a);
        Ok(fix_signs(SvdResult {
            left: u,
            singular_values: s,
            right: v,
        }))
    } else {
        // SVD of the transpose, factors swapped back.
        let (u, s, v) = svd_tall(&a.transpose());
        Ok(fix_signs(SvdResult {
            left: v,
            singular_values: s,
            right: u,
        }))
    }
}

/// One-sided Jacobi on a tall matrix (rows >= cols). Returns economy
/// `(U, sigma, V)` with `U` rows x cols, `V` cols x cols, sorted.
fn svd_tall(a: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let m = a.rows();
    let n = a.cols();
    let mut work = a.clone();
    let mut v = Matrix::identity(n);

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let cp = work.column(p);
                    let cq = work.column(q);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for i in 0..m {
                        alpha += cp[i] * cp[i];
                        beta += cq[i] * cq[i];
                        gamma += cp[i] * cq[i];
                    }
                    (alpha, beta, gamma)
                };
                if gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut work, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort non-increasing with ties
    // kept in original order so the factorization is deterministic.
    let mut sigma: Vec<f64> = (0..n).map(|j| norm(work.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap().then(i.cmp(&j)));

    let mut u = Matrix::zeros(m, n);
    let mut v_sorted = Matrix::zeros(n, n);
    let mut sigma_sorted = vec![0.0; n];
    for (dst, &src) in order.iter().enumerate() {
        sigma_sorted[dst] = sigma[src];
        for i in 0..m {
            u.set(i, dst, work.get(i, src));
        }
        for i in 0..n {
            v_sorted.set(i, dst, v.get(i, src));
        }
    }
    sigma = sigma_sorted;

    // Normalize nonzero columns; fill exact-zero directions with a
    // deterministic orthonormal completion so U always has full column rank.
    let mut filled = Vec::new();
    for (j, &s) in sigma.iter().enumerate() {
        if s > 0.0 {
            let inv = 1.0 / s;
            for i in 0..m {
                let val = u.get(i, j) * inv;
                u.set(i, j, val);
            }
            filled.push(j);
        }
    }
    for (j, &s) in sigma.iter().enumerate() {
        if s == 0.0 {
            let col = complete_direction(&u, &filled, m);
            for (i, &c) in col.iter().enumerate() {
                u.set(i, j, c);
            }
            filled.push(j);
        }
    }

    (u, sigma, v_sorted)
}

fn rotate_columns(mat: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let rows = mat.rows();
    for i in 0..rows {
        let vp = mat.get(i, p);
        let vq = mat.get(i, q);
        mat.set(i, p, c * vp - s * vq);
        mat.set(i, q, s * vp + c * vq);
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// First standard basis vector with a substantial component outside the span
/// of the already-filled columns, orthogonalized and normalized.
fn complete_direction(u: &Matrix, filled: &[usize], m: usize) -> Vec<f64> {
    for basis in 0..m {
        let mut w = vec![0.0; m];
        w[basis] = 1.0;
        for &k in filled {
            let dot: f64 = (0..m).map(|i| w[i] * u.get(i, k)).sum();
            for (i, wi) in w.iter_mut().enumerate() {
                *wi -= dot * u.get(i, k);
            }
        }
        let nw = norm(&w);
        if nw > 0.5 {
            for x in &mut w {
                *x /= nw;
            }
            return w;
        }
    }
    unreachable!("fewer than m orthonormal columns always leave a completion direction");
}

fn fix_signs(mut r: SvdResult) -> SvdResult {
    let m = r.left.rows();
    let n = r.right.rows();
    for j in 0..r.left.cols() {
        let mut best = 0;
        let mut best_abs = r.left.get(0, j).abs();
        for i in 1..m {
            let a = r.left.get(i, j).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if r.left.get(best, j) < 0.0 {
            for i in 0..m {
                let v = -r.left.get(i, j);
                r.left.set(i, j, v);
            }
            for i in 0..n {
                let v = -r.right.get(i, j);
                r.right.set(i, j, v);
            }
        }
    }
    r
}

/// Extend a matrix with orthonormal columns to a square orthogonal matrix by
/// appending deterministic completion directions.
pub fn complete_to_square(u: &Matrix) -> Matrix {
    let m = u.rows();
    let k = u.cols();
    assert!(k <= m);
    let mut out = Matrix::zeros(m, m);
    for j in 0..k {
        for i in 0..m {
            out.set(i, j, u.get(i, j));
        }
    }
    let mut filled: Vec<usize> = (0..k).collect();
    for j in k..m {
        let col = complete_direction(&out, &filled, m);
        for (i, &c) in col.iter().enumerate() {
            out.set(i, j, c);
        }
        filled.push(j);
    }
    out
}

/// Modified Gram-Schmidt orthonormalization of the columns; degenerate
/// columns are replaced by completion directions.
pub(crate) fn orthonormalize_columns(a: &Matrix) -> Matrix {
    let m = a.rows();
    let n = a.cols();
    assert!(n <= m, "cannot orthonormalize more columns than rows");
    let mut out = Matrix::zeros(m, n);
    let mut filled = Vec::new();
    for j in 0..n {
        let mut w: Vec<f64> = (0..m).map(|i| a.get(i, j)).collect();
        for &k in &filled {
            let dot: f64 = (0..m).map(|i| w[i] * out.get(i, k)).sum();
            for (i, wi) in w.iter_mut().enumerate() {
                *wi -= dot * out.get(i, k);
            }
        }
        let nw = norm(&w);
        if nw > 1e-12 {
            for (i, &wi) in w.iter().enumerate() {
                out.set(i, j, wi / nw);
            }
        } else {
            let col = complete_direction(&out, &filled, m);
            for (i, &c) in col.iter().enumerate() {
                out.set(i, j, c);
            }
        }
        filled.push(j);
    }
    out
}

/// Smallest rank whose leading singular-value sum reaches the fraction `tau`
/// of the total sum. Sums are of the values themselves, not their squares.
pub fn rank_by_energy(singular_values: &[f64], tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "energy threshold must be in (0, 1], got {tau}"
        )));
    }
    if singular_values.is_empty() {
        return Err(Error::InvalidArgument("empty singular value list".into()));
    }
    for w in singular_values.windows(2) {
        if w[1] > w[0] {
            return Err(Error::InvalidArgument(
                "singular values must be sorted non-increasing".into(),
            ));
        }
    }
    if singular_values.iter().any(|&s| s < 0.0) {
        return Err(Error::InvalidArgument("negative singular value".into()));
    }
    let total: f64 = singular_values.iter().sum();
    if total == 0.0 {
        return Err(Error::InvalidArgument(
            "all-zero singular values have no energy rank".into(),
        ));
    }
    let mut partial = 0.0;
    for (i, &s) in singular_values.iter().enumerate() {
        partial += s;
        if partial / total >= tau {
            return Ok(i + 1);
        }
    }
    // Floating-point slack: the full sum always reaches any tau <= 1.
    Ok(singular_values.len())
}

/// First `rank` left singular vectors.
pub fn truncate(s: &SvdResult, rank: usize) -> Result<Matrix> {
    if rank == 0 || rank > s.left.cols() {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} out of range 1..={}",
            s.left.cols()
        )));
    }
    Ok(s.left.first_columns(rank))
}
