//! Higher-order SVD: full and truncated Tucker factorization with orthonormal
//! factor matrices, plus checks of the core tensor's structural properties.

use crate::error::{Error, Result};
use crate::linalg::{self, complete_to_square};
use crate::tensor::{DenseTensor, Matrix};
use serde::{Deserialize, Serialize};

/// Core tensor plus one orthonormal factor matrix per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerFactors {
    pub core: DenseTensor,
    /// Factor `n` is `I_n x r_n` with orthonormal columns.
    pub factors: Vec<Matrix>,
    pub original_shape: Vec<usize>,
}

impl TuckerFactors {
    /// Per-mode ranks (the core shape).
    pub fn ranks(&self) -> &[usize] {
        self.core.shape()
    }

    /// Elements needed to store this factorization: the core plus every
    /// factor matrix.
    pub fn stored_elements(&self) -> usize {
        let core: usize = self.core.len();
        let factors: usize = self.factors.iter().map(|f| f.rows() * f.cols()).sum();
        core + factors
    }

    /// Mode products of the core with every factor, back to the original shape.
    pub fn reconstruct(&self) -> DenseTensor {
        let mut t = self.core.clone();
        for (mode, u) in self.factors.iter().enumerate() {
            t = t.mode_product(u, mode).expect("factor shapes are validated");
        }
        t
    }
}

/// How to pick the per-mode ranks of a truncated decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Truncation {
    /// Explicit per-mode ranks; entries larger than a mode length clamp to it.
    Ranks(Vec<usize>),
    /// Energy threshold applied to each mode's singular values.
    Energy(f64),
}

/// Full HoSVD: square orthogonal factors, exact reconstruction.
pub fn hosvd_full(t: &DenseTensor) -> Result<TuckerFactors> {
    let mut factors = Vec::with_capacity(t.ndim());
    for mode in 0..t.ndim() {
        let s = linalg::svd(&t.unfold(mode)?)?;
        let u = if s.left.cols() < t.shape()[mode] {
            complete_to_square(&s.left)
        } else {
            s.left
        };
        factors.push(u);
    }
    Ok(assemble(t, factors))
}

/// Truncated HoSVD. Every mode's SVD is taken on the original tensor's
/// unfolding (not sequentially deflated), and the leading singular vectors
/// are kept per the truncation rule.
pub fn hosvd_truncated(t: &DenseTensor, rule: &Truncation) -> Result<TuckerFactors> {
    let ranks = resolve_ranks(t, rule)?;
    let mut factors = Vec::with_capacity(t.ndim());
    for (mode, &r) in ranks.iter().enumerate() {
        let s = linalg::svd(&t.unfold(mode)?)?;
        let u = if s.left.cols() >= r {
            s.left.first_columns(r)
        } else {
            // Unfolding had fewer columns than the requested rank; extend the
            // basis so the factor stays orthonormal.
            complete_to_square(&s.left).first_columns(r)
        };
        factors.push(u);
    }
    Ok(assemble(t, factors))
}

fn resolve_ranks(t: &DenseTensor, rule: &Truncation) -> Result<Vec<usize>> {
    match rule {
        Truncation::Ranks(ranks) => {
            if ranks.len() != t.ndim() {
                return Err(Error::InvalidArgument(format!(
                    "{} ranks given for a {}-mode tensor",
                    ranks.len(),
                    t.ndim()
                )));
            }
            if ranks.contains(&0) {
                return Err(Error::InvalidArgument("ranks must be positive".into()));
            }
            Ok(ranks
                .iter()
                .zip(t.shape())
                .map(|(&r, &d)| r.min(d))
                .collect())
        }
        Truncation::Energy(tau) => {
            if !(*tau > 0.0 && *tau <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "energy threshold must be in (0, 1], got {tau}"
                )));
            }
            let mut ranks = Vec::with_capacity(t.ndim());
            for mode in 0..t.ndim() {
                let s = linalg::svd(&t.unfold(mode)?)?;
                let r = if s.singular_values.iter().all(|&x| x == 0.0) {
                    1 // zero tensor: keep a single (completed) direction
                } else {
                    linalg::rank_by_energy(&s.singular_values, *tau)?
                };
                ranks.push(r);
            }
            Ok(ranks)
        }
    }
}

fn assemble(t: &DenseTensor, factors: Vec<Matrix>) -> TuckerFactors {
    let mut core = t.clone();
    for (mode, u) in factors.iter().enumerate() {
        core = core
            .mode_product(&u.transpose(), mode)
            .expect("factor rows match mode length");
    }
    TuckerFactors {
        core,
        factors,
        original_shape: t.shape().to_vec(),
    }
}

/// Outcome of checking all-orthogonality and slice-norm ordering of a core
/// tensor, with the worst violations observed.
#[derive(Debug, Clone)]
pub struct CoreCheck {
    pub pass: bool,
    /// Largest |<slice_a, slice_b>| over distinct slice pairs, all modes.
    pub max_orthogonality_violation: f64,
    /// Largest increase from one slice norm to the next, all modes.
    pub max_ordering_violation: f64,
}

/// Verify that core slices along every mode are mutually orthogonal and
/// non-increasing in norm.
pub fn core_property_check(f: &TuckerFactors) -> CoreCheck {
    let core = &f.core;
    let norm_sq = core.data().iter().map(|x| x * x).sum::<f64>();
    let ortho_tol = 1e-8 * norm_sq;
    let order_tol = 1e-10 * (1.0 + norm_sq.sqrt());

    let mut max_ortho: f64 = 0.0;
    let mut max_order: f64 = 0.0;
    for mode in 0..core.ndim() {
        let d = core.shape()[mode];
        let left: usize = core.shape()[..mode].iter().product();
        let right: usize = core.shape()[mode + 1..].iter().product();
        // Gram matrix of the mode-fixed slices.
        let mut gram = vec![0.0; d * d];
        for r in 0..right {
            for a in 0..d {
                for b in a..d {
                    let pa = left * (a + d * r);
                    let pb = left * (b + d * r);
                    let mut dot = 0.0;
                    for l in 0..left {
                        dot += core.data()[pa + l] * core.data()[pb + l];
                    }
                    gram[a * d + b] += dot;
                }
            }
        }
        for a in 0..d {
            for b in (a + 1)..d {
                max_ortho = max_ortho.max(gram[a * d + b].abs());
            }
        }
        for a in 0..d.saturating_sub(1) {
            let na = gram[a * d + a].sqrt();
            let nb = gram[(a + 1) * d + a + 1].sqrt();
            max_order = max_order.max(nb - na);
        }
    }
    CoreCheck {
        pass: max_ortho <= ortho_tol && max_order <= order_tol,
        max_orthogonality_violation: max_ortho,
        max_ordering_violation: max_order,
    }
}
