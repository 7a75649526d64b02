//! Partitioning a tensor into disjoint subtensors by clustering per-mode
//! indices, and the gather/scatter primitives that realize the index sets.
//!
//! A partition assigns every index of every mode to one cluster; the
//! Cartesian product of per-mode clusters carves the tensor into
//! `K = prod(c_n)` disjoint blocks that tile the full index grid exactly
//! once. The diagonal 0/1 restriction matrices this induces are never
//! materialized; index sets are the canonical representation.

use crate::error::{Error, Result};
use crate::rand_util::node_rng;
use crate::tensor::{increment_index, DenseTensor};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Per-mode cluster assignment defining `K = prod(c_n)` disjoint subtensors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPartitionSpec", into = "RawPartitionSpec")]
pub struct PartitionSpec {
    labels: Vec<Vec<usize>>,
    clusters_per_mode: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawPartitionSpec {
    labels: Vec<Vec<usize>>,
    clusters_per_mode: Vec<usize>,
}

impl TryFrom<RawPartitionSpec> for PartitionSpec {
    type Error = Error;
    fn try_from(raw: RawPartitionSpec) -> Result<Self> {
        PartitionSpec::from_labels(raw.labels, &raw.clusters_per_mode)
    }
}

impl From<PartitionSpec> for RawPartitionSpec {
    fn from(p: PartitionSpec) -> Self {
        RawPartitionSpec {
            labels: p.labels,
            clusters_per_mode: p.clusters_per_mode,
        }
    }
}

impl PartitionSpec {
    /// Validate and build: per mode, labels must cover `0..c_n` with every
    /// cluster non-empty.
    pub fn from_labels(labels: Vec<Vec<usize>>, clusters_per_mode: &[usize]) -> Result<Self> {
        if labels.len() != clusters_per_mode.len() {
            return Err(Error::InvalidArgument(format!(
                "{} label arrays for {} modes",
                labels.len(),
                clusters_per_mode.len()
            )));
        }
        for (mode, (lab, &c)) in labels.iter().zip(clusters_per_mode).enumerate() {
            if c == 0 || c > lab.len() {
                return Err(Error::InvalidArgument(format!(
                    "mode {mode}: {c} clusters for {} indices",
                    lab.len()
                )));
            }
            let mut seen = vec![false; c];
            for &l in lab {
                if l >= c {
                    return Err(Error::InvalidArgument(format!(
                        "mode {mode}: label {l} out of range 0..{c}"
                    )));
                }
                seen[l] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::InvalidArgument(format!(
                    "mode {mode}: empty cluster"
                )));
            }
        }
        Ok(Self {
            labels,
            clusters_per_mode: clusters_per_mode.to_vec(),
        })
    }

    pub fn ndim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Vec<usize>] {
        &self.labels
    }

    pub fn clusters_per_mode(&self) -> &[usize] {
        &self.clusters_per_mode
    }

    /// Number of subtensors `K`.
    pub fn num_subtensors(&self) -> usize {
        self.clusters_per_mode.iter().product()
    }

    /// Sorted index sets of one mode's clusters.
    pub fn mode_clusters(&self, mode: usize) -> Vec<Vec<usize>> {
        let c = self.clusters_per_mode[mode];
        let mut sets = vec![Vec::new(); c];
        for (i, &l) in self.labels[mode].iter().enumerate() {
            sets[l].push(i);
        }
        sets
    }

    /// Per-mode index sets of subtensor `k`. Subtensor ids compose the
    /// per-mode cluster ids with the first mode varying fastest.
    pub fn subtensor_index_sets(&self, k: usize) -> Result<Vec<Vec<usize>>> {
        if k >= self.num_subtensors() {
            return Err(Error::InvalidArgument(format!(
                "subtensor {k} out of range 0..{}",
                self.num_subtensors()
            )));
        }
        let mut rest = k;
        let mut sets = Vec::with_capacity(self.ndim());
        for mode in 0..self.ndim() {
            let c = self.clusters_per_mode[mode];
            let cluster = rest % c;
            rest /= c;
            let set: Vec<usize> = self.labels[mode]
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l == cluster)
                .map(|(i, _)| i)
                .collect();
            sets.push(set);
        }
        Ok(sets)
    }
}

/// Strategy for forming the per-mode clusters. Deterministic given its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Partitioner {
    /// Lloyd k-means with k-means++ initialization on the l2-normalized rows
    /// of each mode's unfolding.
    KMeans { seed: u64, max_iters: usize },
    /// Uniformly random split into near-equal clusters.
    Random { seed: u64 },
    /// Caller-provided labels.
    GroundTruth { labels: Vec<Vec<usize>> },
}

impl Partitioner {
    pub fn kmeans(seed: u64) -> Self {
        Partitioner::KMeans {
            seed,
            max_iters: 100,
        }
    }
}

/// Cluster each mode of `t` into `clusters_per_mode[n]` groups.
pub fn make_partition(
    t: &DenseTensor,
    clusters_per_mode: &[usize],
    strategy: &Partitioner,
) -> Result<PartitionSpec> {
    if clusters_per_mode.len() != t.ndim() {
        return Err(Error::InvalidArgument(format!(
            "{} cluster counts for a {}-mode tensor",
            clusters_per_mode.len(),
            t.ndim()
        )));
    }
    for (mode, (&c, &d)) in clusters_per_mode.iter().zip(t.shape()).enumerate() {
        if c == 0 || c > d {
            return Err(Error::InvalidArgument(format!(
                "mode {mode}: cannot split {d} indices into {c} clusters"
            )));
        }
    }
    if let Partitioner::GroundTruth { labels } = strategy {
        return PartitionSpec::from_labels(labels.clone(), clusters_per_mode);
    }

    let mut labels = Vec::with_capacity(t.ndim());
    for (mode, &c) in clusters_per_mode.iter().enumerate() {
        if c == 1 {
            labels.push(vec![0; t.shape()[mode]]);
            continue;
        }
        let lab = match strategy {
            Partitioner::KMeans { seed, max_iters } => {
                let rows = affinity_profiles(t, mode)?;
                cluster_rows(&rows, c, *seed, mode, *max_iters)
            }
            Partitioner::Random { seed } => {
                let mut rng = node_rng(*seed, mode, 0);
                let n = t.shape()[mode];
                let mut perm: Vec<usize> = (0..n).collect();
                // Fisher-Yates
                for i in (1..n).rev() {
                    let j = rng.random_range(0..=i);
                    perm.swap(i, j);
                }
                let mut lab = vec![0usize; n];
                let base = n / c;
                let extra = n % c;
                let mut pos = 0;
                for cluster in 0..c {
                    let size = base + usize::from(cluster < extra);
                    for _ in 0..size {
                        lab[perm[pos]] = cluster;
                        pos += 1;
                    }
                }
                lab
            }
            Partitioner::GroundTruth { .. } => unreachable!(),
        };
        labels.push(lab);
    }
    PartitionSpec::from_labels(labels, clusters_per_mode)
}

/// Clustering features for one mode: each index is described by the absolute
/// correlations of its l2-normalized unfolding row against every other row.
///
/// Residual fibers that share a low-dimensional subspace correlate with each
/// other and decorrelate from the rest, whether or not their coefficients
/// share a sign, so these profiles separate subspace-structured groups that
/// raw Euclidean distances on the rows cannot (random directions within one
/// subspace are as far apart as directions of different subspaces).
fn affinity_profiles(t: &DenseTensor, mode: usize) -> Result<Vec<Vec<f64>>> {
    let m = t.unfold(mode)?;
    let n = m.rows();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<f64> = (0..m.cols()).map(|j| m.get(i, j)).collect();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut row {
                *x /= norm;
            }
        }
        rows.push(row);
    }
    let mut profiles = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            profiles[i][j] = dot.abs();
            profiles[j][i] = dot.abs();
        }
    }
    Ok(profiles)
}

/// Seeded Lloyd iterations; re-seeds on empty clusters, then falls back to
/// splitting the largest cluster so the partition invariant always holds.
fn cluster_rows(
    rows: &[Vec<f64>],
    k: usize,
    seed: u64,
    mode: usize,
    max_iters: usize,
) -> Vec<usize> {
    for attempt in 0..5 {
        let mut rng = node_rng(seed, mode, attempt);
        let labels = lloyd(rows, k, &mut rng, max_iters);
        if cluster_sizes(&labels, k).iter().all(|&s| s > 0) {
            return labels;
        }
    }
    let mut rng = node_rng(seed, mode, 5);
    let mut labels = lloyd(rows, k, &mut rng, max_iters);
    loop {
        let sizes = cluster_sizes(&labels, k);
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return labels;
        };
        let largest = sizes
            .iter()
            .enumerate()
            .max_by_key(|&(i, &s)| (s, usize::MAX - i))
            .map(|(i, _)| i)
            .unwrap();
        // Move the second half of the largest cluster's members.
        let members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == largest)
            .map(|(i, _)| i)
            .collect();
        for &i in &members[members.len() / 2..] {
            labels[i] = empty;
        }
    }
}

fn cluster_sizes(labels: &[usize], k: usize) -> Vec<usize> {
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    sizes
}

fn lloyd(rows: &[Vec<f64>], k: usize, rng: &mut impl Rng, max_iters: usize) -> Vec<usize> {
    let n = rows.len();
    let dim = rows[0].len();
    let mut centers = kmeans_pp_init(rows, k, rng);
    let mut labels = vec![0usize; n];

    for _ in 0..max_iters {
        let mut changed = false;
        for (i, row) in rows.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(row, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; dim]; k];
        for (i, row) in rows.iter().enumerate() {
            counts[labels[i]] += 1;
            for (s, &v) in sums[labels[i]].iter_mut().zip(row) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in &mut sums[c] {
                    *s /= counts[c] as f64;
                }
                centers[c] = sums[c].clone();
            }
            // Empty clusters keep their previous center.
        }
    }
    labels
}

fn kmeans_pp_init(rows: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centers = Vec::with_capacity(k);
    centers.push(rows[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.push(rows[next].clone());
        for (i, row) in rows.iter().enumerate() {
            let d = sq_dist(row, centers.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Gather subtensor `k` into a compact tensor plus the map back to parent
/// coordinates (per-mode sorted parent indices).
pub fn extract_subtensor(
    t: &DenseTensor,
    spec: &PartitionSpec,
    k: usize,
) -> Result<(DenseTensor, Vec<Vec<usize>>)> {
    if spec.ndim() != t.ndim() || spec.labels.iter().zip(t.shape()).any(|(l, &d)| l.len() != d) {
        return Err(Error::ShapeMismatch(format!(
            "partition over {:?} applied to tensor {:?}",
            spec.labels.iter().map(Vec::len).collect::<Vec<_>>(),
            t.shape()
        )));
    }
    let sets = spec.subtensor_index_sets(k)?;
    let sub = gather(t, &sets)?;
    Ok((sub, sets))
}

/// Gather arbitrary per-mode index sets into a compact tensor.
pub fn gather(t: &DenseTensor, index_map: &[Vec<usize>]) -> Result<DenseTensor> {
    check_map(index_map, t.shape())?;
    let shape: Vec<usize> = index_map.iter().map(Vec::len).collect();
    let mut out = DenseTensor::zeros(shape.clone())?;
    let mut idx = vec![0usize; shape.len()];
    let mut parent = vec![0usize; shape.len()];
    for pos in 0..out.len() {
        for (m, &i) in idx.iter().enumerate() {
            parent[m] = index_map[m][i];
        }
        out.data_mut()[pos] = t.get(&parent);
        increment_index(&mut idx, &shape);
    }
    Ok(out)
}

/// Scatter a compact subtensor back to full size, zero outside the block.
pub fn embed_subtensor(
    sub: &DenseTensor,
    index_map: &[Vec<usize>],
    parent_shape: &[usize],
) -> Result<DenseTensor> {
    check_map(index_map, parent_shape)?;
    let expected: Vec<usize> = index_map.iter().map(Vec::len).collect();
    if sub.shape() != expected.as_slice() {
        return Err(Error::ShapeMismatch(format!(
            "subtensor {:?} does not match index map {expected:?}",
            sub.shape()
        )));
    }
    let mut out = DenseTensor::zeros(parent_shape.to_vec())?;
    let mut idx = vec![0usize; sub.ndim()];
    let mut parent = vec![0usize; sub.ndim()];
    for pos in 0..sub.len() {
        for (m, &i) in idx.iter().enumerate() {
            parent[m] = index_map[m][i];
        }
        let flat = out.flat_index(&parent);
        out.data_mut()[flat] = sub.data()[pos];
        increment_index(&mut idx, sub.shape());
    }
    Ok(out)
}

/// Add `sub` (at `index_map`) into `acc` in place; avoids materializing the
/// embedded tensor when summing many blocks.
pub(crate) fn scatter_add(acc: &mut DenseTensor, sub: &DenseTensor, index_map: &[Vec<usize>]) {
    let mut idx = vec![0usize; sub.ndim()];
    let mut parent = vec![0usize; sub.ndim()];
    for pos in 0..sub.len() {
        for (m, &i) in idx.iter().enumerate() {
            parent[m] = index_map[m][i];
        }
        let flat = acc.flat_index(&parent);
        acc.data_mut()[flat] += sub.data()[pos];
        increment_index(&mut idx, sub.shape());
    }
}

fn check_map(index_map: &[Vec<usize>], parent_shape: &[usize]) -> Result<()> {
    if index_map.len() != parent_shape.len() {
        return Err(Error::ShapeMismatch(format!(
            "index map has {} modes, parent has {}",
            index_map.len(),
            parent_shape.len()
        )));
    }
    for (mode, (set, &d)) in index_map.iter().zip(parent_shape).enumerate() {
        if set.is_empty() {
            return Err(Error::InvalidArgument(format!("mode {mode}: empty index set")));
        }
        for w in set.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidArgument(format!(
                    "mode {mode}: index set must be strictly increasing"
                )));
            }
        }
        if *set.last().unwrap() >= d {
            return Err(Error::InvalidArgument(format!(
                "mode {mode}: index {} out of range 0..{d}",
                set.last().unwrap()
            )));
        }
    }
    Ok(())
}
