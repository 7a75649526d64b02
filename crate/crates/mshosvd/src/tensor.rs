//! Dense N-mode tensors and the multilinear algebra primitives built on them.
//!
//! Elements are stored in first-index-fastest order: the flat position of
//! `(i_1, ..., i_N)` is `i_1 + I_1*(i_2 + I_2*(i_3 + ...))`. Matrices are
//! column-major, so a 2-mode tensor and a matrix with the same data agree
//! byte for byte.
//!
//! Mode-n unfolding arranges the mode-n fibers as columns. The column holding
//! fiber `(i_1, ..., i_{n-1}, i_{n+1}, ..., i_N)` is indexed with the
//! remaining modes in increasing order, lower modes varying fastest. This is
//! the ordering under which
//!
//! ```text
//! (X x_1 U1 ... x_N UN)_(n) = Un * X_(n) * (UN ⊗ ... ⊗ U{n+1} ⊗ U{n-1} ⊗ ... ⊗ U1)^T
//! ```
//!
//! holds exactly, with `⊗` the matrix Kronecker product.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dense matrix of 64-bit floats, column-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + n * i] = 1.0;
        }
        m
    }

    /// Build from a column-major data slice.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "matrix {}x{} needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from rows given as nested slices (convenient in tests).
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + self.rows * j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i + self.rows * j] = v;
    }

    /// Borrow column `j` as a contiguous slice.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[self.rows * j..self.rows * (j + 1)]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.data[j + self.cols * i] = self.data[i + self.rows * j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..self.cols {
                let b = other.data[k + other.rows * j];
                if b == 0.0 {
                    continue;
                }
                let a_col = &self.data[self.rows * k..self.rows * (k + 1)];
                let o_col = &mut out.data[self.rows * j..self.rows * (j + 1)];
                for i in 0..self.rows {
                    o_col[i] += a_col[i] * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Keep the first `k` columns.
    pub fn first_columns(&self, k: usize) -> Matrix {
        assert!(k <= self.cols);
        Matrix {
            rows: self.rows,
            cols: k,
            data: self.data[..self.rows * k].to_vec(),
        }
    }
}

/// Dense N-mode tensor of 64-bit floats, first-index-fastest element order.
///
/// Values are immutable in spirit: every operation returns a fresh tensor,
/// so shared references can safely cross threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Construct from an explicit shape and flat data in first-index-fastest
    /// order. The data length must equal the product of the mode lengths and
    /// every mode length must be at least one.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "tensor shape must have N >= 1 positive mode lengths, got {shape:?}"
            )));
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        Self::new(shape, vec![0.0; n])
    }

    /// Build element-wise from the multi-index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let mut idx = vec![0usize; t.ndim()];
        for pos in 0..t.len() {
            t.data[pos] = f(&idx);
            increment_index(&mut idx, &t.shape);
        }
        Ok(t)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Flat position of a multi-index.
    #[inline]
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut pos = 0;
        let mut stride = 1;
        for (i, &d) in idx.iter().zip(&self.shape) {
            debug_assert!(*i < d);
            pos += i * stride;
            stride *= d;
        }
        pos
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let pos = self.flat_index(idx);
        self.data[pos] = v;
    }

    /// Mode-n unfolding: an `I_n x prod(I_m, m != n)` matrix whose columns are
    /// the mode-n fibers, ordered as described in the module docs.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        self.check_mode(mode)?;
        let rows = self.shape[mode];
        let cols = self.len() / rows;
        let mut m = Matrix::zeros(rows, cols);

        // Walking flat positions in order visits the column composite index
        // (remaining modes, increasing, lower fastest) in order for each fixed
        // mode index, so a single pass with two counters suffices.
        let left: usize = self.shape[..mode].iter().product();
        let right: usize = self.shape[mode + 1..].iter().product();
        for r in 0..right {
            for i in 0..rows {
                let src = left * (i + rows * r);
                let dst_col_base = r * left;
                for l in 0..left {
                    m.data[i + rows * (dst_col_base + l)] = self.data[src + l];
                }
            }
        }
        Ok(m)
    }

    /// Mode-n product with `u` acting on mode-n fibers: the result replaces
    /// mode length `I_n` by `u.rows()` and satisfies
    /// `(X x_n U)_(n) = U * X_(n)`.
    pub fn mode_product(&self, u: &Matrix, mode: usize) -> Result<DenseTensor> {
        self.check_mode(mode)?;
        let i_n = self.shape[mode];
        if u.cols() != i_n {
            return Err(Error::ShapeMismatch(format!(
                "mode-{mode} product: matrix has {} columns, mode length is {i_n}",
                u.cols()
            )));
        }
        let j = u.rows();
        let left: usize = self.shape[..mode].iter().product();
        let right: usize = self.shape[mode + 1..].iter().product();

        let mut out_shape = self.shape.clone();
        out_shape[mode] = j;
        let mut out = vec![0.0; left * j * right];

        for r in 0..right {
            let in_base = left * i_n * r;
            let out_base = left * j * r;
            for i in 0..i_n {
                let in_col = &self.data[in_base + left * i..in_base + left * (i + 1)];
                for jj in 0..j {
                    let w = u.get(jj, i);
                    if w == 0.0 {
                        continue;
                    }
                    let out_col = &mut out[out_base + left * jj..out_base + left * (jj + 1)];
                    for l in 0..left {
                        out_col[l] += w * in_col[l];
                    }
                }
            }
        }
        DenseTensor::new(out_shape, out)
    }

    pub fn inner_product(&self, other: &DenseTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "inner product of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Frobenius norm: square root of the sum of squared elements.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn subtract(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| alpha * x).collect(),
        }
    }

    fn zip_with(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<DenseTensor> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!(
                "element-wise op on {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.ndim() {
            return Err(Error::InvalidMode {
                mode,
                ndim: self.ndim(),
            });
        }
        Ok(())
    }
}

/// Inverse of [`DenseTensor::unfold`] with the same column ordering.
pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
    if mode >= shape.len() {
        return Err(Error::InvalidMode {
            mode,
            ndim: shape.len(),
        });
    }
    let total: usize = shape.iter().product();
    if m.rows() != shape[mode] || m.rows() * m.cols() != total {
        return Err(Error::ShapeMismatch(format!(
            "cannot fold {}x{} into {:?} along mode {mode}",
            m.rows(),
            m.cols(),
            shape
        )));
    }
    let rows = shape[mode];
    let left: usize = shape[..mode].iter().product();
    let right: usize = shape[mode + 1..].iter().product();
    let mut data = vec![0.0; total];
    for r in 0..right {
        for i in 0..rows {
            let dst = left * (i + rows * r);
            let src_col_base = r * left;
            for l in 0..left {
                data[dst + l] = m.data[i + rows * (src_col_base + l)];
            }
        }
    }
    DenseTensor::new(shape.to_vec(), data)
}

/// Advance a multi-index one step in first-index-fastest order.
pub(crate) fn increment_index(idx: &mut [usize], shape: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(shape) {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}
