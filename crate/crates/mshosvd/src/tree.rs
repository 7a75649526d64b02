//! The multiscale decomposition tree: breadth-first construction, partial
//! reconstruction, greedy rate-distortion pruning, and storage accounting.
//!
//! Each node holds a truncated Tucker factorization of one block of its
//! parent's residual. Scale 0 is the whole tensor; children of a node
//! partition what its factorization missed. Summing every node's
//! reconstruction, embedded at its index map, telescopes back toward the
//! original tensor.

use crate::error::{Error, Result};
use crate::hosvd::{hosvd_truncated, TuckerFactors, Truncation};
use crate::partition::{extract_subtensor, make_partition, scatter_add, PartitionSpec, Partitioner};
use crate::rand_util;
use crate::tensor::DenseTensor;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Per-scale rank selection for the node factorizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RankPolicy {
    /// One energy threshold shared by every node at every scale.
    Tau(f64),
    /// Explicit per-mode ranks for each scale; entry `s` applies to all
    /// scale-`s` nodes, clamped to each block's mode lengths.
    PerScale(Vec<Vec<usize>>),
}

/// How residuals are split into child blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PartitionStrategy {
    KMeans,
    Random,
    /// Explicit root-level labels; only valid for single-scale trees since
    /// the labels do not propagate to subtensors.
    GroundTruth(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub clusters_per_mode: Vec<usize>,
    pub max_scale: usize,
    pub rank_policy: RankPolicy,
    pub strategy: PartitionStrategy,
    pub seed: u64,
}

impl TreeConfig {
    fn validate(&self, shape: &[usize]) -> Result<()> {
        if self.clusters_per_mode.len() != shape.len() {
            return Err(Error::InvalidArgument(format!(
                "{} cluster counts for a {}-mode tensor",
                self.clusters_per_mode.len(),
                shape.len()
            )));
        }
        if self.clusters_per_mode.contains(&0) {
            return Err(Error::InvalidArgument("cluster counts must be positive".into()));
        }
        match &self.rank_policy {
            RankPolicy::Tau(tau) => {
                if !(*tau > 0.0 && *tau <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "energy threshold must be in (0, 1], got {tau}"
                    )));
                }
            }
            RankPolicy::PerScale(ranks) => {
                if ranks.len() <= self.max_scale {
                    return Err(Error::InvalidArgument(format!(
                        "rank policy covers {} scales, tree has {}",
                        ranks.len(),
                        self.max_scale + 1
                    )));
                }
                for r in ranks {
                    if r.len() != shape.len() || r.contains(&0) {
                        return Err(Error::InvalidArgument(format!(
                            "bad per-scale ranks {r:?} for {}-mode tensor",
                            shape.len()
                        )));
                    }
                }
            }
        }
        if matches!(self.strategy, PartitionStrategy::GroundTruth(_)) && self.max_scale > 1 {
            return Err(Error::InvalidArgument(
                "ground-truth partitioning only supports max_scale <= 1".into(),
            ));
        }
        Ok(())
    }

    fn truncation_for_scale(&self, scale: usize) -> Truncation {
        match &self.rank_policy {
            RankPolicy::Tau(tau) => Truncation::Energy(*tau),
            RankPolicy::PerScale(ranks) => Truncation::Ranks(ranks[scale].clone()),
        }
    }

    fn partitioner_for_node(&self, scale: usize, id: usize) -> Partitioner {
        let seed = node_seed(self.seed, scale, id);
        match &self.strategy {
            PartitionStrategy::KMeans => Partitioner::KMeans {
                seed,
                max_iters: 100,
            },
            PartitionStrategy::Random => Partitioner::Random { seed },
            PartitionStrategy::GroundTruth(labels) => Partitioner::GroundTruth {
                labels: labels.clone(),
            },
        }
    }
}

fn node_seed(seed: u64, scale: usize, id: usize) -> u64 {
    // Any stable mixing works; reuse the stream derivation.
    use rand::RngCore;
    rand_util::node_rng(seed, scale, id).next_u64()
}

/// One node of the multiscale tree.
#[derive(Debug, Clone, PartialEq)]
pub struct MsNode {
    pub scale: usize,
    /// Node number within its scale, assigned in creation order.
    pub id: usize,
    pub factors: TuckerFactors,
    /// Per-mode indices into the root tensor.
    pub index_map: Vec<Vec<usize>>,
    /// Partition used to spawn children, if any.
    pub partition: Option<PartitionSpec>,
    /// Arena positions of the children.
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

/// Rooted tree of block factorizations.
#[derive(Debug, Clone, PartialEq)]
pub struct MsTree {
    nodes: Vec<MsNode>,
    pub config: TreeConfig,
    pub original_shape: Vec<usize>,
}

impl MsTree {
    pub fn nodes(&self) -> &[MsNode] {
        &self.nodes
    }

    pub fn root(&self) -> &MsNode {
        &self.nodes[0]
    }

    /// Rebuild from parts; used by deserialization. Validates parent/child
    /// link consistency and that the root covers the full index range.
    pub fn from_parts(
        nodes: Vec<MsNode>,
        config: TreeConfig,
        original_shape: Vec<usize>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Format("tree without nodes".into()));
        }
        if nodes[0].scale != 0
            || nodes[0]
                .index_map
                .iter()
                .zip(&original_shape)
                .any(|(set, &d)| set.len() != d)
        {
            return Err(Error::Format("root must cover the full index range".into()));
        }
        for (pos, node) in nodes.iter().enumerate() {
            for &c in &node.children {
                if c >= nodes.len() || nodes[c].parent != Some(pos) {
                    return Err(Error::Format("inconsistent parent/child links".into()));
                }
            }
        }
        Ok(Self {
            nodes,
            config,
            original_shape,
        })
    }

    /// Total elements stored across all nodes (cores plus factors).
    pub fn stored_elements(&self) -> usize {
        self.nodes.iter().map(|n| n.factors.stored_elements()).sum()
    }

    /// Deepest scale present.
    pub fn max_scale_present(&self) -> usize {
        self.nodes.iter().map(|n| n.scale).max().unwrap_or(0)
    }
}

/// Build the full tree to `config.max_scale` (breadth-first, deterministic).
pub fn build(t: &DenseTensor, config: &TreeConfig) -> Result<MsTree> {
    config.validate(t.shape())?;
    let mut nodes: Vec<MsNode> = Vec::new();
    let mut next_id_at_scale = vec![0usize; config.max_scale + 2];

    struct Pending {
        parent: Option<usize>,
        scale: usize,
        id: usize,
        input: DenseTensor,
        index_map: Vec<Vec<usize>>,
    }

    let mut queue = VecDeque::new();
    let full_map: Vec<Vec<usize>> = t.shape().iter().map(|&d| (0..d).collect()).collect();
    next_id_at_scale[0] = 1;
    queue.push_back(Pending {
        parent: None,
        scale: 0,
        id: 0,
        input: t.clone(),
        index_map: full_map,
    });

    while let Some(job) = queue.pop_front() {
        let rule = config.truncation_for_scale(job.scale);
        let factors = hosvd_truncated(&job.input, &rule)?;
        let pos = nodes.len();
        let mut partition = None;

        if job.scale < config.max_scale {
            let residual = job.input.subtract(&factors.reconstruct())?;
            // Blocks can shrink below the requested cluster count at deeper
            // scales; clamp so the build stays total.
            let clusters: Vec<usize> = config
                .clusters_per_mode
                .iter()
                .zip(residual.shape())
                .map(|(&c, &d)| c.min(d))
                .collect();
            let spec = make_partition(
                &residual,
                &clusters,
                &config.partitioner_for_node(job.scale, job.id),
            )?;
            for k in 0..spec.num_subtensors() {
                let (sub, local_map) = extract_subtensor(&residual, &spec, k)?;
                let global_map = compose_maps(&job.index_map, &local_map);
                let child_id = next_id_at_scale[job.scale + 1];
                next_id_at_scale[job.scale + 1] += 1;
                queue.push_back(Pending {
                    parent: Some(pos),
                    scale: job.scale + 1,
                    id: child_id,
                    input: sub,
                    index_map: global_map,
                });
            }
            partition = Some(spec);
        }

        if let Some(p) = job.parent {
            nodes[p].children.push(pos);
        }
        nodes.push(MsNode {
            scale: job.scale,
            id: job.id,
            factors,
            index_map: job.index_map,
            partition,
            children: Vec::new(),
            parent: job.parent,
        });
    }

    Ok(MsTree {
        nodes,
        config: config.clone(),
        original_shape: t.shape().to_vec(),
    })
}

fn compose_maps(parent: &[Vec<usize>], local: &[Vec<usize>]) -> Vec<Vec<usize>> {
    parent
        .iter()
        .zip(local)
        .map(|(p, l)| l.iter().map(|&i| p[i]).collect())
        .collect()
}

/// Sum of every node reconstruction up to (and including) scale `j`,
/// embedded at the node index maps.
pub fn reconstruct_tree(tree: &MsTree, up_to_scale: usize) -> Result<DenseTensor> {
    if up_to_scale > tree.config.max_scale {
        return Err(Error::InvalidArgument(format!(
            "scale {up_to_scale} beyond tree depth {}",
            tree.config.max_scale
        )));
    }
    let mut acc = DenseTensor::zeros(tree.original_shape.clone())?;
    for node in &tree.nodes {
        if node.scale <= up_to_scale {
            scatter_add(&mut acc, &node.factors.reconstruct(), &node.index_map);
        }
    }
    Ok(acc)
}

/// Normalized reconstruction error, stored-element count, compression rate,
/// and the pruning objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub normalized_error: f64,
    pub stored_elements: u64,
    pub compression_rate: f64,
    pub objective_h: f64,
    pub lambda: f64,
}

/// Evaluate a tree against the tensor it approximates.
pub fn cost_report(tree: &MsTree, original: &DenseTensor, lambda: f64) -> Result<CostReport> {
    if original.shape() != tree.original_shape.as_slice() {
        return Err(Error::ShapeMismatch(format!(
            "tree over {:?} scored against {:?}",
            tree.original_shape,
            original.shape()
        )));
    }
    let approx = reconstruct_tree(tree, tree.config.max_scale)?;
    let norm = original.norm();
    let err = original.subtract(&approx)?.norm();
    let normalized_error = if norm > 0.0 { err / norm } else { err };
    let stored = tree.stored_elements();
    let compression_rate = stored as f64 / original.len() as f64;
    Ok(CostReport {
        normalized_error,
        stored_elements: stored as u64,
        compression_rate,
        objective_h: normalized_error + lambda * compression_rate,
        lambda,
    })
}

/// Outcome of a greedy pruning run.
#[derive(Debug, Clone)]
pub struct PruneResult {
    pub tree: MsTree,
    pub report: CostReport,
    /// Objective value after the root and after each accepted node.
    pub objective_trace: Vec<f64>,
}

/// Greedy tree construction minimizing `error + lambda * compression`.
///
/// The root is always accepted; afterwards the candidate block whose
/// acceptance lowers the objective the most is added, its children join the
/// candidate list, and the loop stops when no candidate improves the
/// objective by more than `1e-9`.
pub fn prune(t: &DenseTensor, config: &TreeConfig, lambda: f64) -> Result<PruneResult> {
    prune_with_threshold(t, config, lambda, 1e-9)
}

pub fn prune_with_threshold(
    t: &DenseTensor,
    config: &TreeConfig,
    lambda: f64,
    min_decrease: f64,
) -> Result<PruneResult> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    config.validate(t.shape())?;
    let total_elements = t.len() as f64;
    let x_norm = t.norm();
    let norm_div = if x_norm > 0.0 { x_norm } else { 1.0 };

    struct Candidate {
        parent: usize,
        scale: usize,
        id: usize,
        index_map: Vec<Vec<usize>>,
        factors: TuckerFactors,
        residual: DenseTensor,
        /// Squared-norm reduction of the global error if accepted.
        gain_sq: f64,
        stored: usize,
    }

    let mut nodes: Vec<MsNode> = Vec::new();
    let mut next_id_at_scale = vec![0usize; config.max_scale + 2];
    let mut candidates: Vec<Candidate> = Vec::new();

    // Root first, unconditionally.
    let root_factors = hosvd_truncated(t, &config.truncation_for_scale(0))?;
    let root_residual = t.subtract(&root_factors.reconstruct())?;
    let mut error_sq = root_residual.norm().powi(2);
    let mut stored = root_factors.stored_elements();
    next_id_at_scale[0] = 1;
    let full_map: Vec<Vec<usize>> = t.shape().iter().map(|&d| (0..d).collect()).collect();
    nodes.push(MsNode {
        scale: 0,
        id: 0,
        factors: root_factors,
        index_map: full_map,
        partition: None,
        children: Vec::new(),
        parent: None,
    });

    let objective = |err_sq: f64, stored: usize| -> f64 {
        err_sq.max(0.0).sqrt() / norm_div + lambda * stored as f64 / total_elements
    };
    let mut current_h = objective(error_sq, stored);
    let mut trace = vec![current_h];

    // Expands an accepted node: partitions its residual and pushes the child
    // blocks (already decomposed) onto the candidate list.
    fn expand(
        config: &TreeConfig,
        pos: usize,
        residual: &DenseTensor,
        nodes: &mut [MsNode],
        next_id_at_scale: &mut [usize],
        candidates: &mut Vec<Candidate>,
    ) -> Result<()> {
        let node_scale = nodes[pos].scale;
        if node_scale >= config.max_scale {
            return Ok(());
        }
        let clusters: Vec<usize> = config
            .clusters_per_mode
            .iter()
            .zip(residual.shape())
            .map(|(&c, &d)| c.min(d))
            .collect();
        let spec = make_partition(
            residual,
            &clusters,
            &config.partitioner_for_node(node_scale, nodes[pos].id),
        )?;
        let child_rule = config.truncation_for_scale(node_scale + 1);
        for k in 0..spec.num_subtensors() {
            let (sub, local_map) = extract_subtensor(residual, &spec, k)?;
            let global_map = compose_maps(&nodes[pos].index_map, &local_map);
            let factors = hosvd_truncated(&sub, &child_rule)?;
            let child_residual = sub.subtract(&factors.reconstruct())?;
            let gain_sq = sub.norm().powi(2) - child_residual.norm().powi(2);
            let id = next_id_at_scale[node_scale + 1];
            next_id_at_scale[node_scale + 1] += 1;
            candidates.push(Candidate {
                parent: pos,
                scale: node_scale + 1,
                id,
                index_map: global_map,
                stored: factors.stored_elements(),
                factors,
                residual: child_residual,
                gain_sq,
            });
        }
        nodes[pos].partition = Some(spec);
        Ok(())
    }

    expand(
        config,
        0,
        &root_residual,
        &mut nodes,
        &mut next_id_at_scale,
        &mut candidates,
    )?;

    loop {
        // Every candidate is re-scored against the current tree state; the
        // disjoint supports make the score a closed form of the memoized
        // gain and storage numbers.
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in candidates.iter().enumerate() {
            let h = objective(error_sq - c.gain_sq, stored + c.stored);
            let better = match best {
                None => true,
                Some((bi, bh)) => {
                    let b = &candidates[bi];
                    h < bh || (h == bh && (c.scale, c.id) < (b.scale, b.id))
                }
            };
            if better {
                best = Some((i, h));
            }
        }
        let Some((idx, h)) = best else { break };
        if current_h - h < min_decrease {
            break;
        }
        let cand = candidates.swap_remove(idx);
        error_sq -= cand.gain_sq;
        stored += cand.stored;
        current_h = h;
        trace.push(h);

        let pos = nodes.len();
        nodes[cand.parent].children.push(pos);
        nodes.push(MsNode {
            scale: cand.scale,
            id: cand.id,
            factors: cand.factors,
            index_map: cand.index_map,
            partition: None,
            children: Vec::new(),
            parent: Some(cand.parent),
        });
        expand(
            config,
            pos,
            &cand.residual,
            &mut nodes,
            &mut next_id_at_scale,
            &mut candidates,
        )?;
    }

    let tree = MsTree {
        nodes,
        config: config.clone(),
        original_shape: t.shape().to_vec(),
    };
    let report = cost_report(&tree, t, lambda)?;
    Ok(PruneResult {
        tree,
        report,
        objective_trace: trace,
    })
}

/// Exact stored-element counts for a uniform one-scale configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryCostCheck {
    /// Scale-0 cost `r0^N + N*I*r0`.
    pub scale0_cost: u128,
    /// Scale-1 cost `c^N * r1^N + c^(N-1) * N * I * r1`.
    pub scale1_cost: u128,
    /// Whether `r1 * c^(N-1) <= r0`.
    pub rank_condition_met: bool,
    /// Whether the scale-1 cost is strictly below the scale-0 cost.
    pub scale1_cheaper: bool,
}

/// Evaluate the storage-growth criterion for uniform mode length `I`,
/// cluster count `c`, and ranks `r0` (scale 0) and `r1` (scale 1).
pub fn memory_cost_bound_check(
    n_modes: u32,
    mode_len: u128,
    clusters: u128,
    r0: u128,
    r1: u128,
) -> MemoryCostCheck {
    let n = n_modes;
    let scale0 = r0.pow(n) + u128::from(n) * mode_len * r0;
    let scale1 = clusters.pow(n) * r1.pow(n) + clusters.pow(n - 1) * u128::from(n) * mode_len * r1;
    MemoryCostCheck {
        scale0_cost: scale0,
        scale1_cost: scale1,
        rank_condition_met: r1 * clusters.pow(n - 1) <= r0,
        scale1_cheaper: scale1 < scale0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::random_tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basic_config(max_scale: usize, ranks: Vec<Vec<usize>>) -> TreeConfig {
        TreeConfig {
            clusters_per_mode: vec![2, 2, 2],
            max_scale,
            rank_policy: RankPolicy::PerScale(ranks),
            strategy: PartitionStrategy::Random,
            seed: 17,
        }
    }

    #[test]
    fn zero_scale_tree_is_plain_truncated_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let t = random_tensor(&[6, 6, 6], &mut rng);
        let cfg = basic_config(0, vec![vec![2, 2, 2]]);
        let tree = build(&t, &cfg).unwrap();
        assert_eq!(tree.nodes().len(), 1);
        let direct = hosvd_truncated(&t, &Truncation::Ranks(vec![2, 2, 2])).unwrap();
        assert_eq!(reconstruct_tree(&tree, 0).unwrap(), direct.reconstruct());
    }

    #[test]
    fn one_scale_tree_has_root_plus_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let t = random_tensor(&[8, 8, 8], &mut rng);
        let cfg = basic_config(1, vec![vec![2, 2, 2], vec![2, 2, 2]]);
        let tree = build(&t, &cfg).unwrap();
        assert_eq!(tree.nodes().len(), 9);
        assert_eq!(tree.root().children.len(), 8);
        // Children tile the root index grid.
        let covered: usize = tree.nodes()[1..]
            .iter()
            .map(|n| n.index_map.iter().map(Vec::len).product::<usize>())
            .sum();
        assert_eq!(covered, t.len());
    }

    #[test]
    fn full_rank_everywhere_recovers_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let t = random_tensor(&[6, 4, 4], &mut rng);
        let cfg = TreeConfig {
            clusters_per_mode: vec![2, 2, 1],
            max_scale: 2,
            rank_policy: RankPolicy::PerScale(vec![
                vec![6, 4, 4],
                vec![6, 4, 4],
                vec![6, 4, 4],
            ]),
            strategy: PartitionStrategy::Random,
            seed: 3,
        };
        let tree = build(&t, &cfg).unwrap();
        // With full rank at scale 0 the residual is already zero; the
        // telescoping still holds at every depth.
        for j in 0..=2 {
            let err = t.subtract(&reconstruct_tree(&tree, j).unwrap()).unwrap().norm();
            assert!(err <= 1e-9 * t.norm(), "scale {j}: {err}");
        }
    }

    #[test]
    fn truncated_scales_telescope_exactly_at_full_rank_leaves() {
        // Truncated root, full-rank leaves: scale-1 reconstruction recovers
        // the tensor because the leaf blocks absorb the entire residual.
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let t = random_tensor(&[6, 6, 4], &mut rng);
        let cfg = TreeConfig {
            clusters_per_mode: vec![2, 2, 2],
            max_scale: 1,
            rank_policy: RankPolicy::PerScale(vec![vec![2, 2, 2], vec![6, 6, 4]]),
            strategy: PartitionStrategy::Random,
            seed: 5,
        };
        let tree = build(&t, &cfg).unwrap();
        let err = t.subtract(&reconstruct_tree(&tree, 1).unwrap()).unwrap().norm();
        assert!(err <= 1e-12 * (1.0 + t.norm()));
    }

    #[test]
    fn reconstruction_error_is_non_increasing_in_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let t = random_tensor(&[8, 8, 6], &mut rng);
        let cfg = TreeConfig {
            clusters_per_mode: vec![2, 2, 2],
            max_scale: 2,
            rank_policy: RankPolicy::PerScale(vec![vec![2; 3], vec![2; 3], vec![1; 3]]),
            strategy: PartitionStrategy::KMeans,
            seed: 7,
        };
        let tree = build(&t, &cfg).unwrap();
        let mut last = f64::INFINITY;
        for j in 0..=2 {
            let err = t.subtract(&reconstruct_tree(&tree, j).unwrap()).unwrap().norm();
            assert!(err <= last + 1e-12, "scale {j}: {err} > {last}");
            last = err;
        }
        assert!(reconstruct_tree(&tree, 3).is_err());
    }

    #[test]
    fn build_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let t = random_tensor(&[6, 6, 6], &mut rng);
        let cfg = TreeConfig {
            clusters_per_mode: vec![2, 2, 2],
            max_scale: 1,
            rank_policy: RankPolicy::Tau(0.7),
            strategy: PartitionStrategy::KMeans,
            seed: 99,
        };
        assert_eq!(build(&t, &cfg).unwrap(), build(&t, &cfg).unwrap());
    }

    #[test]
    fn energy_policy_adapts_ranks_per_node() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let t = random_tensor(&[6, 6, 6], &mut rng);
        let cfg = TreeConfig {
            clusters_per_mode: vec![2, 2, 2],
            max_scale: 1,
            rank_policy: RankPolicy::Tau(0.6),
            strategy: PartitionStrategy::Random,
            seed: 2,
        };
        let tree = build(&t, &cfg).unwrap();
        for node in tree.nodes() {
            for (r, d) in node.factors.ranks().iter().zip(node.factors.original_shape.iter()) {
                assert!(*r >= 1 && r <= d);
            }
        }
    }

    #[test]
    fn config_validation() {
        let t = DenseTensor::zeros(vec![4, 4]).unwrap();
        let mut cfg = TreeConfig {
            clusters_per_mode: vec![2, 2, 2],
            max_scale: 0,
            rank_policy: RankPolicy::Tau(0.5),
            strategy: PartitionStrategy::Random,
            seed: 0,
        };
        assert!(build(&t, &cfg).is_err()); // wrong mode count
        cfg.clusters_per_mode = vec![2, 2];
        cfg.rank_policy = RankPolicy::PerScale(vec![]);
        assert!(build(&t, &cfg).is_err()); // missing scale ranks
        cfg.rank_policy = RankPolicy::Tau(0.5);
        cfg.strategy = PartitionStrategy::GroundTruth(vec![vec![0, 0, 1, 1]; 2]);
        cfg.max_scale = 2;
        assert!(build(&t, &cfg).is_err()); // ground truth beyond one scale
    }

    #[test]
    fn deep_scales_clamp_cluster_counts_and_ranks() {
        // 4 indices per mode split twice leaves single-index blocks at scale
        // 2; the build must clamp rather than fail.
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let t = random_tensor(&[4, 4], &mut rng);
        let cfg = TreeConfig {
            clusters_per_mode: vec![2, 2],
            max_scale: 2,
            rank_policy: RankPolicy::PerScale(vec![vec![2, 2], vec![2, 2], vec![2, 2]]),
            strategy: PartitionStrategy::Random,
            seed: 1,
        };
        let tree = build(&t, &cfg).unwrap();
        let err = t.subtract(&reconstruct_tree(&tree, 2).unwrap()).unwrap().norm();
        // Scale-2 blocks are scalars decomposed at (clamped) full rank, so
        // recovery is exact.
        assert!(err <= 1e-9 * t.norm());
    }

    #[test]
    fn prune_with_huge_lambda_keeps_only_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let t = random_tensor(&[8, 8, 8], &mut rng);
        let cfg = basic_config(2, vec![vec![2; 3], vec![2; 3], vec![1; 3]]);
        let result = prune(&t, &cfg, 1e6).unwrap();
        assert_eq!(result.tree.nodes().len(), 1);
        assert_eq!(result.objective_trace.len(), 1);
    }

    #[test]
    fn prune_with_zero_lambda_matches_full_build_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let t = random_tensor(&[8, 8, 8], &mut rng);
        let cfg = basic_config(2, vec![vec![2; 3], vec![2; 3], vec![1; 3]]);
        let full = build(&t, &cfg).unwrap();
        let full_err = t
            .subtract(&reconstruct_tree(&full, 2).unwrap())
            .unwrap()
            .norm()
            / t.norm();
        let pruned = prune(&t, &cfg, 0.0).unwrap();
        assert!(
            (pruned.report.normalized_error - full_err).abs() <= 1e-8,
            "pruned {} vs full {full_err}",
            pruned.report.normalized_error
        );
    }

    #[test]
    fn prune_objective_strictly_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let t = random_tensor(&[8, 8, 8], &mut rng);
        let cfg = basic_config(2, vec![vec![2; 3], vec![2; 3], vec![1; 3]]);
        let result = prune(&t, &cfg, 0.05).unwrap();
        for w in result.objective_trace.windows(2) {
            assert!(w[1] < w[0]);
        }
        // The reported objective matches its parts.
        let r = &result.report;
        assert!((r.objective_h - (r.normalized_error + r.lambda * r.compression_rate)).abs() < 1e-12);
    }

    #[test]
    fn lambda_sweep_trades_error_for_compression() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let t = random_tensor(&[8, 8, 8], &mut rng);
        let cfg = basic_config(2, vec![vec![2; 3], vec![2; 3], vec![1; 3]]);
        let mut last_compression = f64::INFINITY;
        let mut last_error = 0.0;
        for lambda in [0.0, 0.1, 0.5, 2.0, 1e6] {
            let r = prune(&t, &cfg, lambda).unwrap().report;
            assert!(r.compression_rate <= last_compression + 1e-12);
            assert!(r.normalized_error >= last_error - 1e-12);
            last_compression = r.compression_rate;
            last_error = r.normalized_error;
        }
    }

    #[test]
    fn prune_rejects_bad_lambda() {
        let t = DenseTensor::zeros(vec![2, 2]).unwrap();
        let cfg = TreeConfig {
            clusters_per_mode: vec![1, 1],
            max_scale: 0,
            rank_policy: RankPolicy::Tau(0.9),
            strategy: PartitionStrategy::Random,
            seed: 0,
        };
        assert!(prune(&t, &cfg, -1.0).is_err());
        assert!(prune(&t, &cfg, f64::NAN).is_err());
    }

    #[test]
    fn cost_report_matches_hand_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let t = random_tensor(&[4, 4, 4], &mut rng);
        let cfg = TreeConfig {
            clusters_per_mode: vec![2, 2, 2],
            max_scale: 0,
            rank_policy: RankPolicy::PerScale(vec![vec![2, 2, 2]]),
            strategy: PartitionStrategy::Random,
            seed: 0,
        };
        let tree = build(&t, &cfg).unwrap();
        let report = cost_report(&tree, &t, 0.5).unwrap();
        // Core 2*2*2 plus three 4x2 factors.
        assert_eq!(report.stored_elements, 8 + 3 * 8);
        assert!((report.compression_rate - 32.0 / 64.0).abs() < 1e-15);
        let exact = build(
            &t,
            &TreeConfig {
                rank_policy: RankPolicy::PerScale(vec![vec![4, 4, 4]]),
                ..cfg
            },
        )
        .unwrap();
        assert!(cost_report(&exact, &t, 0.0).unwrap().normalized_error < 1e-12);
    }

    #[test]
    fn memory_cost_criterion() {
        // r1 at the boundary r0 / c^(N-1) keeps scale 1 cheaper.
        let ok = memory_cost_bound_check(3, 20, 2, 4, 1);
        assert_eq!(ok.scale0_cost, 64 + 240);
        assert_eq!(ok.scale1_cost, 8 + 240);
        assert!(ok.rank_condition_met && ok.scale1_cheaper);

        let bad = memory_cost_bound_check(3, 20, 2, 4, 4);
        assert!(!bad.rank_condition_met && !bad.scale1_cheaper);
        assert!(bad.scale1_cost > bad.scale0_cost);

        // c = 1 degenerates to the same functional form.
        let degenerate = memory_cost_bound_check(3, 20, 1, 4, 4);
        assert_eq!(degenerate.scale0_cost, degenerate.scale1_cost);
    }
}
