//! Supervised feature extraction over the multiscale decomposition.
//!
//! The sample mode is always last and is never partitioned. Training fits a
//! truncated decomposition of the first N-1 modes, partitions the residual,
//! fits full-rank bases per block, projects every sample through both
//! scales, and keeps the features with the highest Fisher scores. Test data
//! goes through the stored training projections and partition, so train and
//! test features live in the same coordinates.

use crate::error::{Error, Result};
use crate::linalg::{self, complete_to_square};
use crate::partition::{gather, make_partition, PartitionSpec, Partitioner};
use crate::tensor::{DenseTensor, Matrix};
use rand_chacha::ChaCha8Rng;

/// Settings for [`fit_features`].
#[derive(Debug, Clone)]
pub struct FeatureConfig {
    /// Cluster counts per mode; the last entry (sample mode) must be 1.
    pub clusters_per_mode: Vec<usize>,
    /// Energy threshold for the scale-0 ranks.
    pub tau: f64,
    /// Number of features to keep (clamped to the total available).
    pub num_features: usize,
    pub seed: u64,
}

/// Trained projection pipeline plus the selected feature indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModel {
    /// Scale-0 factors for the first N-1 modes.
    scale0_factors: Vec<Matrix>,
    /// Partition of the training residual (sample mode has one cluster).
    partition: PartitionSpec,
    /// Per block, full-rank factors for the first N-1 modes.
    block_factors: Vec<Vec<Matrix>>,
    /// Lengths of the first N-1 training modes.
    data_shape: Vec<usize>,
    /// Selected feature indices, sorted by descending Fisher score.
    pub selected: Vec<usize>,
    /// Fisher score of every extracted feature (before selection).
    pub all_scores: Vec<f64>,
    /// Requested feature count before clamping.
    pub requested_features: usize,
}

impl FeatureModel {
    pub fn num_features(&self) -> usize {
        self.selected.len()
    }

    pub fn was_clamped(&self) -> bool {
        self.selected.len() < self.requested_features
    }

    pub fn scale0_factors(&self) -> &[Matrix] {
        &self.scale0_factors
    }
}

/// Fit the two-scale feature pipeline on a training tensor whose last mode
/// indexes samples. Requires at least two classes with two samples each.
pub fn fit_features(
    train: &DenseTensor,
    labels: &[usize],
    config: &FeatureConfig,
) -> Result<FeatureModel> {
    let n = train.ndim();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "feature extraction needs at least one data mode plus the sample mode".into(),
        ));
    }
    let samples = train.shape()[n - 1];
    if labels.len() != samples {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {samples} samples",
            labels.len()
        )));
    }
    if config.clusters_per_mode.len() != n || config.clusters_per_mode[n - 1] != 1 {
        return Err(Error::InvalidArgument(
            "clusters_per_mode must cover all modes with a single sample-mode cluster".into(),
        ));
    }
    check_class_counts(labels)?;

    // Scale-0 bases of the data modes, ranks by the energy criterion.
    let mut scale0_factors = Vec::with_capacity(n - 1);
    for mode in 0..n - 1 {
        let s = linalg::svd(&train.unfold(mode)?)?;
        let rank = if s.singular_values.iter().all(|&v| v == 0.0) {
            1
        } else {
            linalg::rank_by_energy(&s.singular_values, config.tau)?
        };
        scale0_factors.push(s.left.first_columns(rank));
    }

    // Residual after projecting the data modes onto the scale-0 bases; the
    // sample mode is untouched so the same computation applies to test data.
    let residual = data_mode_residual(train, &scale0_factors)?;
    let partition = make_partition(
        &residual,
        &config.clusters_per_mode,
        &Partitioner::KMeans {
            seed: config.seed,
            max_iters: 100,
        },
    )?;

    // Full-rank bases per residual block.
    let mut block_factors = Vec::with_capacity(partition.num_subtensors());
    for k in 0..partition.num_subtensors() {
        let sets = partition.subtensor_index_sets(k)?;
        let block = gather(&residual, &sets)?;
        let mut factors = Vec::with_capacity(n - 1);
        for mode in 0..n - 1 {
            let s = linalg::svd(&block.unfold(mode)?)?;
            let u = if s.left.cols() < block.shape()[mode] {
                complete_to_square(&s.left)
            } else {
                s.left
            };
            factors.push(u);
        }
        block_factors.push(factors);
    }

    let mut model = FeatureModel {
        scale0_factors,
        partition,
        block_factors,
        data_shape: train.shape()[..n - 1].to_vec(),
        selected: Vec::new(),
        all_scores: Vec::new(),
        requested_features: config.num_features,
    };

    let feats = project_all(&model, train)?;
    let scores = fisher_score(&feats, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    order.truncate(config.num_features.min(scores.len()));
    model.selected = order;
    model.all_scores = scores;
    Ok(model)
}

/// Project a tensor (training or test; sample mode last) into the selected
/// feature space. Rows are samples, columns follow `model.selected`.
pub fn transform(model: &FeatureModel, t: &DenseTensor) -> Result<Matrix> {
    let all = project_all(model, t)?;
    let mut out = Matrix::zeros(all.rows(), model.selected.len());
    for (dst, &src) in model.selected.iter().enumerate() {
        for i in 0..all.rows() {
            out.set(i, dst, all.get(i, src));
        }
    }
    Ok(out)
}

/// Full (unselected) feature matrix: scale-0 projections first, then each
/// block's projections in block order, flattened first-mode-fastest.
pub fn project_all(model: &FeatureModel, t: &DenseTensor) -> Result<Matrix> {
    let n = t.ndim();
    if n != model.data_shape.len() + 1 || t.shape()[..n - 1] != model.data_shape[..] {
        return Err(Error::ShapeMismatch(format!(
            "expected data modes {:?} plus a sample mode, got {:?}",
            model.data_shape,
            t.shape()
        )));
    }
    let samples = t.shape()[n - 1];

    let mut blocks: Vec<Matrix> = Vec::with_capacity(1 + model.block_factors.len());

    let mut s0 = t.clone();
    for (mode, u) in model.scale0_factors.iter().enumerate() {
        s0 = s0.mode_product(&u.transpose(), mode)?;
    }
    blocks.push(s0.unfold(n - 1)?);

    let residual = data_mode_residual(t, &model.scale0_factors)?;
    for (k, factors) in model.block_factors.iter().enumerate() {
        let mut sets = model.partition.subtensor_index_sets(k)?;
        // The stored sample-mode set sized for training data is replaced by
        // the full range of this tensor's samples.
        sets[n - 1] = (0..samples).collect();
        let mut block = gather(&residual, &sets)?;
        for (mode, u) in factors.iter().enumerate() {
            block = block.mode_product(&u.transpose(), mode)?;
        }
        blocks.push(block.unfold(n - 1)?);
    }

    let total: usize = blocks.iter().map(Matrix::cols).sum();
    let mut out = Matrix::zeros(samples, total);
    let mut offset = 0;
    for b in &blocks {
        for j in 0..b.cols() {
            for i in 0..samples {
                out.set(i, offset + j, b.get(i, j));
            }
        }
        offset += b.cols();
    }
    Ok(out)
}

/// Subtract the projection of the data modes onto the given bases; the
/// sample mode passes through.
fn data_mode_residual(t: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    let mut proj = t.clone();
    for (mode, u) in factors.iter().enumerate() {
        proj = proj.mode_product(&u.matmul(&u.transpose())?, mode)?;
    }
    t.subtract(&proj)
}

fn check_class_counts(labels: &[usize]) -> Result<Vec<(usize, usize)>> {
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidArgument(
            "at least two classes are required".into(),
        ));
    }
    let counts: Vec<(usize, usize)> = classes
        .iter()
        .map(|&c| (c, labels.iter().filter(|&&l| l == c).count()))
        .collect();
    if let Some((c, n)) = counts.iter().find(|&&(_, n)| n < 2) {
        return Err(Error::InvalidArgument(format!(
            "class {c} has only {n} sample(s)"
        )));
    }
    Ok(counts)
}

/// Sentinel score for features with zero within-class variance but nonzero
/// between-class separation.
pub const FISHER_SENTINEL: f64 = 1e300;

/// Per-feature ratio of weighted between-class variance to pooled
/// within-class variance. Rows of `features` are samples.
pub fn fisher_score(features: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    if features.rows() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} feature rows for {} labels",
            features.rows(),
            labels.len()
        )));
    }
    let counts = check_class_counts(labels)?;
    let n = features.rows() as f64;
    let mut scores = Vec::with_capacity(features.cols());
    for j in 0..features.cols() {
        let grand_mean: f64 = (0..features.rows()).map(|i| features.get(i, j)).sum::<f64>() / n;
        let mut between = 0.0;
        let mut within = 0.0;
        for &(class, count) in &counts {
            let members: Vec<f64> = labels
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l == class)
                .map(|(i, _)| features.get(i, j))
                .collect();
            let mean: f64 = members.iter().sum::<f64>() / count as f64;
            between += count as f64 * (mean - grand_mean).powi(2);
            within += members.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        }
        scores.push(if within == 0.0 {
            if between == 0.0 {
                0.0
            } else {
                FISHER_SENTINEL
            }
        } else {
            between / within
        });
    }
    Ok(scores)
}

/// Nearest-neighbor labels by Euclidean distance; ties go to the earlier
/// training row.
pub fn knn1_classify(
    train: &Matrix,
    train_labels: &[usize],
    test: &Matrix,
) -> Result<Vec<usize>> {
    if train.rows() == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if train.rows() != train_labels.len() || train.cols() != test.cols() {
        return Err(Error::ShapeMismatch(
            "classifier input dimensions disagree".into(),
        ));
    }
    let mut out = Vec::with_capacity(test.rows());
    for i in 0..test.rows() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for r in 0..train.rows() {
            let d: f64 = (0..train.cols())
                .map(|j| (test.get(i, j) - train.get(r, j)).powi(2))
                .sum();
            if d < best_d {
                best_d = d;
                best = r;
            }
        }
        out.push(train_labels[best]);
    }
    Ok(out)
}

/// Gaussian naive Bayes with per-class per-feature mean and variance
/// (variance floored at 1e-9) and class log priors.
pub fn naive_bayes_classify(
    train: &Matrix,
    train_labels: &[usize],
    test: &Matrix,
) -> Result<Vec<usize>> {
    if train.rows() == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if train.rows() != train_labels.len() || train.cols() != test.cols() {
        return Err(Error::ShapeMismatch(
            "classifier input dimensions disagree".into(),
        ));
    }
    let mut classes: Vec<usize> = train_labels.to_vec();
    classes.sort_unstable();
    classes.dedup();

    const VAR_FLOOR: f64 = 1e-9;
    struct ClassStats {
        label: usize,
        log_prior: f64,
        mean: Vec<f64>,
        var: Vec<f64>,
    }
    let stats: Vec<ClassStats> = classes
        .iter()
        .map(|&label| {
            let members: Vec<usize> = train_labels
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l == label)
                .map(|(i, _)| i)
                .collect();
            let m = members.len() as f64;
            let mut mean = vec![0.0; train.cols()];
            let mut var = vec![0.0; train.cols()];
            for j in 0..train.cols() {
                mean[j] = members.iter().map(|&i| train.get(i, j)).sum::<f64>() / m;
                var[j] = (members
                    .iter()
                    .map(|&i| (train.get(i, j) - mean[j]).powi(2))
                    .sum::<f64>()
                    / m)
                    .max(VAR_FLOOR);
            }
            ClassStats {
                label,
                log_prior: (m / train.rows() as f64).ln(),
                mean,
                var,
            }
        })
        .collect();

    let mut out = Vec::with_capacity(test.rows());
    for i in 0..test.rows() {
        let mut best = stats[0].label;
        let mut best_score = f64::NEG_INFINITY;
        for s in &stats {
            let mut score = s.log_prior;
            for j in 0..test.cols() {
                let d = test.get(i, j) - s.mean[j];
                score -= 0.5 * (d * d / s.var[j] + s.var[j].ln());
            }
            if score > best_score {
                best_score = score;
                best = s.label;
            }
        }
        out.push(best);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Model serialization
// ---------------------------------------------------------------------------

#[derive(serde::Serialize, serde::Deserialize)]
struct FeatureModelManifest {
    format_version: u16,
    data_shape: Vec<usize>,
    partition: PartitionSpec,
    /// Selected feature indices with their Fisher scores, descending.
    selected: Vec<(usize, f64)>,
    all_scores: Vec<f64>,
    requested_features: usize,
    num_blocks: usize,
}

/// Serialize a model into a directory: a JSON manifest (including the
/// selected indices and their scores) plus the factor matrices as tensor
/// records. Round trips are bit-exact.
pub fn save_model(dir: impl AsRef<std::path::Path>, model: &FeatureModel) -> Result<()> {
    use crate::io::write_tensor;
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir.join("factors"))?;
    let manifest = FeatureModelManifest {
        format_version: 1,
        data_shape: model.data_shape.clone(),
        partition: model.partition.clone(),
        selected: model
            .selected
            .iter()
            .map(|&i| (i, model.all_scores[i]))
            .collect(),
        all_scores: model.all_scores.clone(),
        requested_features: model.requested_features,
        num_blocks: model.block_factors.len(),
    };
    let json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Format(format!("manifest encoding: {e}")))?;
    std::fs::write(dir.join("feature_model.json"), json)?;

    let write_factor = |path: std::path::PathBuf, m: &Matrix| -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let as_tensor = DenseTensor::new(vec![m.rows(), m.cols()], m.data().to_vec())?;
        write_tensor(&mut file, &as_tensor)?;
        use std::io::Write;
        file.flush()?;
        Ok(())
    };
    for (mode, u) in model.scale0_factors.iter().enumerate() {
        write_factor(dir.join(format!("factors/scale0_{mode}.mstn")), u)?;
    }
    for (k, factors) in model.block_factors.iter().enumerate() {
        for (mode, u) in factors.iter().enumerate() {
            write_factor(dir.join(format!("factors/block_{k}_{mode}.mstn")), u)?;
        }
    }
    Ok(())
}

pub fn load_model(dir: impl AsRef<std::path::Path>) -> Result<FeatureModel> {
    use crate::io::read_tensor;
    let dir = dir.as_ref();
    let raw = std::fs::read(dir.join("feature_model.json"))?;
    let manifest: FeatureModelManifest =
        serde_json::from_slice(&raw).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    if manifest.format_version != 1 {
        return Err(Error::Format(format!(
            "unsupported feature model version {}",
            manifest.format_version
        )));
    }
    let read_factor = |path: std::path::PathBuf| -> Result<Matrix> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        let t = read_tensor(&mut file)?;
        if t.ndim() != 2 {
            return Err(Error::Format("factor record is not a matrix".into()));
        }
        Matrix::from_col_major(t.shape()[0], t.shape()[1], t.data().to_vec())
    };
    let n_modes = manifest.data_shape.len();
    let mut scale0_factors = Vec::with_capacity(n_modes);
    for mode in 0..n_modes {
        scale0_factors.push(read_factor(dir.join(format!("factors/scale0_{mode}.mstn")))?);
    }
    let mut block_factors = Vec::with_capacity(manifest.num_blocks);
    for k in 0..manifest.num_blocks {
        let mut factors = Vec::with_capacity(n_modes);
        for mode in 0..n_modes {
            factors.push(read_factor(dir.join(format!("factors/block_{k}_{mode}.mstn")))?);
        }
        block_factors.push(factors);
    }
    let selected: Vec<usize> = manifest.selected.iter().map(|&(i, _)| i).collect();
    if selected.iter().any(|&i| i >= manifest.all_scores.len()) {
        return Err(Error::Format("selected index out of range".into()));
    }
    Ok(FeatureModel {
        scale0_factors,
        partition: manifest.partition,
        block_factors,
        data_shape: manifest.data_shape,
        selected,
        all_scores: manifest.all_scores,
        requested_features: manifest.requested_features,
    })
}

// ---------------------------------------------------------------------------
// Two-class synthetic data for pipeline checks and the CLI demo
// ---------------------------------------------------------------------------

/// Labeled tensors with a planted rank-1 class difference.
#[derive(Debug, Clone)]
pub struct TwoClassData {
    pub train: DenseTensor,
    pub train_labels: Vec<usize>,
    pub test: DenseTensor,
    pub test_labels: Vec<usize>,
    /// The planted discriminative directions, one unit vector per data mode.
    pub planted: Vec<Vec<f64>>,
}

/// Samples live in a shared random low-dimensional background; class 1 adds
/// a fixed rank-1 component along `planted`. Separable by construction.
pub fn two_class_synthetic(
    seed: u64,
    data_shape: &[usize],
    train_per_class: usize,
    test_per_class: usize,
) -> TwoClassData {
    use crate::rand_util::gaussian;
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_modes = data_shape.len();

    let unit = |rng: &mut ChaCha8Rng, d: usize| {
        let mut v: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        v
    };

    // Shared background directions and the planted class direction.
    let background: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|_| (0..n_modes).map(|m| unit(&mut rng, data_shape[m])).collect())
        .collect();
    let planted: Vec<Vec<f64>> = (0..n_modes).map(|m| unit(&mut rng, data_shape[m])).collect();

    let make = |count: usize, rng: &mut ChaCha8Rng| {
        let mut shape = data_shape.to_vec();
        shape.push(count);
        let mut t = DenseTensor::zeros(shape).unwrap();
        let mut labels = Vec::with_capacity(count);
        let slab: usize = data_shape.iter().product();
        for s in 0..count {
            let label = s % 2;
            labels.push(label);
            let coefs: Vec<f64> = (0..background.len()).map(|_| gaussian(rng)).collect();
            let slab_data = &mut t.data_mut()[s * slab..(s + 1) * slab];
            let mut idx = vec![0usize; n_modes];
            for v in slab_data.iter_mut() {
                let mut value = 0.0;
                for (b, dirs) in background.iter().enumerate() {
                    let mut prod = coefs[b];
                    for (m, &i) in idx.iter().enumerate() {
                        prod *= dirs[m][i];
                    }
                    value += prod;
                }
                if label == 1 {
                    let mut prod = 3.0;
                    for (m, &i) in idx.iter().enumerate() {
                        prod *= planted[m][i];
                    }
                    value += prod;
                }
                value += 0.05 * gaussian(rng);
                *v = value;
                crate::tensor::increment_index(&mut idx, data_shape);
            }
        }
        (t, labels)
    };

    let (train, train_labels) = make(2 * train_per_class, &mut rng);
    let (test, test_labels) = make(2 * test_per_class, &mut rng);
    TwoClassData {
        train,
        train_labels,
        test,
        test_labels,
        planted,
    }
}

/// Convenience: fraction of matching labels.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}
