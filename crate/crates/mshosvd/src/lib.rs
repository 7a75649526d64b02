//! Multiscale higher-order SVD.
//!
//! A tensor is approximated by a truncated Tucker factorization, the residual
//! is partitioned into disjoint subtensors by clustering each mode's fibers,
//! and the scheme recurses on the subtensors. The result is a tree of small
//! factorizations whose leaves capture progressively finer detail; a greedy
//! pruning pass trades reconstruction error against stored size.
//!
//! All values are plain `f64` data, every operation is a pure function, and
//! every random choice flows from an explicit seed, so identical inputs
//! reproduce identical outputs byte for byte.

pub mod analysis;
pub mod error;
pub mod features;
pub mod hosvd;
pub mod io;
pub mod linalg;
pub mod partition;
pub mod tensor;
pub mod tree;

pub(crate) mod rand_util;
#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Error, Result};
pub use hosvd::{hosvd_full, hosvd_truncated, TuckerFactors, Truncation};
pub use partition::{extract_subtensor, embed_subtensor, make_partition, PartitionSpec, Partitioner};
pub use tensor::{fold, DenseTensor, Matrix};
pub use tree::{CostReport, MsTree, TreeConfig};
