//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measurements (run with `--nocapture` to see them on success).
//!
//! Reference bands for the synthetic benchmark are previously reported
//! mean/std values for this exact configuration; a cell passes its band
//! check when our mean lies within the reference mean plus or minus three
//! reference standard deviations. Because the synthetic construction is
//! under-specified (component norm split, factor distribution), the band
//! outcomes are reported cell by cell while the ordering properties are the
//! hard gate: ground truth never loses to clustering, clustering never loses
//! to random, error decreases in rank, and the one-scale decomposition beats
//! the single truncated decomposition at a matched storage budget.

mod common;

use common::*;
use mshosvd::analysis::{self, BOUND_RANKS, HOSVD_RANKS, MS_RANKS, MS_STRATEGIES};
use mshosvd::features;
use mshosvd::hosvd::{self, Truncation};
use mshosvd::tensor::{fold, Matrix};
use mshosvd::tree::{self, PartitionStrategy, RankPolicy, TreeConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const TRIALS: usize = 20;
const BASE_SEED: u64 = 1;

#[test]
fn criterion_1_algebraic_property_suite() {
    let start = Instant::now();
    let instances = 1000;
    let tol = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(101);

    // Mode-product linearity in both arguments.
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let x = random_tensor(&[3, 4, 2], &mut rng);
        let y = random_tensor(&[3, 4, 2], &mut rng);
        let u = random_matrix(5, 4, &mut rng);
        let v = random_matrix(5, 4, &mut rng);
        let (a, b) = (gaussian(&mut rng), gaussian(&mut rng));
        let lhs = x
            .scale(a)
            .add(&y.scale(b))
            .unwrap()
            .mode_product(&u, 1)
            .unwrap();
        let rhs = x
            .mode_product(&u, 1)
            .unwrap()
            .scale(a)
            .add(&y.mode_product(&u, 1).unwrap().scale(b))
            .unwrap();
        worst = worst.max(relative_gap(&lhs, &rhs));

        let mut uv = Matrix::zeros(5, 4);
        for j in 0..4 {
            for i in 0..5 {
                uv.set(i, j, a * u.get(i, j) + b * v.get(i, j));
            }
        }
        let lhs = x.mode_product(&uv, 1).unwrap();
        let rhs = x
            .mode_product(&u, 1)
            .unwrap()
            .scale(a)
            .add(&x.mode_product(&v, 1).unwrap().scale(b))
            .unwrap();
        worst = worst.max(relative_gap(&lhs, &rhs));
    }
    assert!(worst <= tol, "linearity: {worst:e}");
    let linearity = worst;

    // Distinct-mode commutation and same-mode composition.
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let x = random_tensor(&[3, 4, 2], &mut rng);
        let u = random_matrix(2, 4, &mut rng);
        let v = random_matrix(4, 2, &mut rng);
        let a = x.mode_product(&u, 1).unwrap().mode_product(&v, 2).unwrap();
        let b = x.mode_product(&v, 2).unwrap().mode_product(&u, 1).unwrap();
        worst = worst.max(relative_gap(&a, &b));
        let w = random_matrix(3, 2, &mut rng);
        let composed = x.mode_product(&u, 1).unwrap().mode_product(&w, 1).unwrap();
        let direct = x.mode_product(&w.matmul(&u).unwrap(), 1).unwrap();
        worst = worst.max(relative_gap(&composed, &direct));
    }
    assert!(worst <= tol, "commutation/composition: {worst:e}");
    let commutation = worst;

    // Multi-mode projection error decomposition.
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let shape = [4usize, 3, 3];
        let x = random_tensor(&shape, &mut rng);
        let ps: Vec<Matrix> = shape
            .iter()
            .map(|&d| projector(&random_orthonormal(d, (d / 2).max(1), &mut rng)))
            .collect();
        let mut proj = x.clone();
        for (mode, p) in ps.iter().enumerate() {
            proj = proj.mode_product(p, mode).unwrap();
        }
        let lhs = x.subtract(&proj).unwrap().norm().powi(2);
        let mut rhs = 0.0;
        for n in 0..shape.len() {
            let mut t = x.clone();
            for (h, p) in ps.iter().enumerate().take(n) {
                t = t.mode_product(p, h).unwrap();
            }
            rhs += t
                .mode_product(&complement(&ps[n]), n)
                .unwrap()
                .norm()
                .powi(2);
        }
        worst = worst.max((lhs - rhs).abs() / (1.0 + rhs));
    }
    assert!(worst <= tol, "projection decomposition: {worst:e}");
    let pythagorean = worst;

    // Matricization isometry.
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let x = random_tensor(&[4, 3, 3], &mut rng);
        for mode in 0..3 {
            let f = x.unfold(mode).unwrap().frobenius_norm();
            worst = worst.max((f - x.norm()).abs() / (1.0 + x.norm()));
        }
    }
    assert!(worst <= tol, "isometry: {worst:e}");
    let isometry = worst;

    // Kronecker unfolding identity with random square factors (pins the
    // column-ordering convention), plus the fold round trip.
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let shape = [3usize, 2, 3];
        let x = random_tensor(&shape, &mut rng);
        let us: Vec<Matrix> = shape
            .iter()
            .map(|&d| random_matrix(d, d, &mut rng))
            .collect();
        let mut y = x.clone();
        for (mode, u) in us.iter().enumerate() {
            y = y.mode_product(u, mode).unwrap();
        }
        for mode in 0..shape.len() {
            let mut kron: Option<Matrix> = None;
            for m in (0..shape.len()).rev() {
                if m == mode {
                    continue;
                }
                kron = Some(match kron {
                    None => us[m].clone(),
                    Some(k) => kronecker(&k, &us[m]),
                });
            }
            let lhs = y.unfold(mode).unwrap();
            let rhs = us[mode]
                .matmul(&x.unfold(mode).unwrap())
                .unwrap()
                .matmul(&kron.unwrap().transpose())
                .unwrap();
            let diff: f64 = lhs
                .data()
                .iter()
                .zip(rhs.data())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(diff / (1.0 + rhs.frobenius_norm()));
            assert_eq!(fold(&lhs, mode, y.shape()).unwrap(), y);
        }
    }
    assert!(worst <= tol, "kronecker identity: {worst:e}");
    let kronecker_err = worst;

    // Orthogonal split along a single mode.
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let x = random_tensor(&[4, 5, 3], &mut rng);
        let p = projector(&random_orthonormal(5, 2, &mut rng));
        let xp = x.mode_product(&p, 1).unwrap();
        let xq = x.subtract(&xp).unwrap();
        let cross = xp.inner_product(&xq).unwrap().abs();
        let pythag = (xp.norm().powi(2) + xq.norm().powi(2) - x.norm().powi(2)).abs();
        worst = worst.max((cross + pythag) / (1.0 + x.norm().powi(2)));
    }
    assert!(worst <= tol, "orthogonal split: {worst:e}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "suite took {elapsed:?}");
    println!(
        "ACCEPTANCE 1 algebraic-properties: PASS ({instances} instances/property, \
         worst relative errors: linearity {linearity:.2e}, commutation {commutation:.2e}, \
         pythagorean {pythagorean:.2e}, isometry {isometry:.2e}, kronecker {kronecker_err:.2e}, \
         split {worst:.2e}; {elapsed:?})"
    );
}

#[test]
fn criterion_2_hosvd_exactness_and_core_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst_recon: f64 = 0.0;
    for _ in 0..100 {
        let t = random_tensor(&[6, 7, 8], &mut rng);
        let f = hosvd::hosvd_full(&t).unwrap();
        let err = t.subtract(&f.reconstruct()).unwrap().norm() / t.norm();
        worst_recon = worst_recon.max(err);
        assert!(err <= 1e-9, "reconstruction error {err:e}");
        let check = hosvd::core_property_check(&f);
        assert!(
            check.pass,
            "core properties violated: orthogonality {:e}, ordering {:e}",
            check.max_orthogonality_violation, check.max_ordering_violation
        );
    }
    println!(
        "ACCEPTANCE 2 hosvd-exactness-and-core-properties: PASS \
         (100 random 6x7x8 tensors, worst relative reconstruction error {worst_recon:.2e})"
    );
}

/// Reference (mean, std) per cell of the synthetic error table.
fn reference_bands() -> Vec<(&'static str, usize, f64, f64)> {
    vec![
        ("ground_truth", 2, 0.2502, 0.0263),
        ("ground_truth", 4, 0.0304, 0.0077),
        ("kmeans", 2, 0.3587, 0.0583),
        ("kmeans", 4, 0.1099, 0.0391),
        ("kmeans", 6, 0.0254, 0.0152),
        ("random", 2, 0.6095, 0.0398),
        ("random", 4, 0.3588, 0.0298),
        ("random", 6, 0.1855, 0.0251),
        ("hosvd", 4, 0.5457, 0.0449),
        ("hosvd", 8, 0.2127, 0.0195),
        ("hosvd", 12, 0.0733, 0.0129),
    ]
}

#[test]
fn criterion_3_synthetic_error_table() {
    let bench = analysis::run_error_benchmark(TRIALS, BASE_SEED).unwrap();

    let mut within = 0;
    let mut outside = 0;
    for (strategy, rank, mean, std) in reference_bands() {
        let cell = bench.cell(strategy, rank).unwrap();
        let lo = mean - 3.0 * std;
        let hi = mean + 3.0 * std;
        let ok = cell.mean >= lo && cell.mean <= hi;
        if ok {
            within += 1;
        } else {
            outside += 1;
        }
        println!(
            "  cell {strategy}/rank{rank}: mean {:.6} std {:.6}, reference band \
             [{lo:.6}, {hi:.6}] -> {}",
            cell.mean,
            cell.std,
            if ok { "within" } else { "outside" }
        );
    }

    // Mandatory ordering properties.
    for rank in MS_RANKS {
        let gt = bench.cell("ground_truth", rank).unwrap().mean;
        let km = bench.cell("kmeans", rank).unwrap().mean;
        let rnd = bench.cell("random", rank).unwrap().mean;
        assert!(gt <= km + 1e-12, "rank {rank}: ground truth {gt} vs clustering {km}");
        assert!(km <= rnd + 1e-12, "rank {rank}: clustering {km} vs random {rnd}");
    }
    for strategy in MS_STRATEGIES {
        let means: Vec<f64> = MS_RANKS
            .iter()
            .map(|&r| bench.cell(strategy, r).unwrap().mean)
            .collect();
        assert!(
            means[0] > means[1] && means[1] > means[2],
            "{strategy}: errors not strictly decreasing in rank: {means:?}"
        );
    }
    {
        let means: Vec<f64> = HOSVD_RANKS
            .iter()
            .map(|&r| bench.cell("hosvd", r).unwrap().mean)
            .collect();
        assert!(
            means[0] > means[1] && means[1] > means[2],
            "hosvd: errors not strictly decreasing in rank: {means:?}"
        );
    }

    // Matched storage budget: the one-scale decomposition with the true
    // partition must beat the largest single truncated decomposition that
    // fits in the same number of stored elements.
    for r1 in [2usize, 4] {
        let mut ms_errors = Vec::new();
        let mut hosvd_errors = Vec::new();
        let mut budget = 0usize;
        let mut rank_h = 0usize;
        for trial in 0..TRIALS {
            let seed = BASE_SEED + trial as u64;
            let (x, gt) = analysis::generate_synthetic(seed);
            let config = TreeConfig {
                clusters_per_mode: vec![2, 2, 2],
                max_scale: 1,
                rank_policy: RankPolicy::PerScale(vec![vec![2, 2, 2], vec![r1; 3]]),
                strategy: PartitionStrategy::GroundTruth(gt.labels().to_vec()),
                seed,
            };
            let ms_tree = tree::build(&x, &config).unwrap();
            if trial == 0 {
                budget = ms_tree.stored_elements();
                rank_h = (1usize..=20)
                    .take_while(|&r| r.pow(3) + 3 * 20 * r <= budget)
                    .last()
                    .unwrap();
            }
            let approx = tree::reconstruct_tree(&ms_tree, 1).unwrap();
            ms_errors.push(x.subtract(&approx).unwrap().norm() / x.norm());
            let f = hosvd::hosvd_truncated(&x, &Truncation::Ranks(vec![rank_h; 3])).unwrap();
            hosvd_errors.push(x.subtract(&f.reconstruct()).unwrap().norm() / x.norm());
        }
        let ms_mean: f64 = ms_errors.iter().sum::<f64>() / TRIALS as f64;
        let hosvd_mean: f64 = hosvd_errors.iter().sum::<f64>() / TRIALS as f64;
        println!(
            "  matched budget (block rank {r1}): {budget} elements, one-scale error \
             {ms_mean:.6} vs rank-{rank_h} truncation error {hosvd_mean:.6}"
        );
        assert!(
            ms_mean < hosvd_mean,
            "one-scale decomposition ({ms_mean}) did not beat matched-budget truncation \
             ({hosvd_mean}) at block rank {r1}"
        );
    }

    println!(
        "ACCEPTANCE 3 synthetic-error-table: PASS ({TRIALS} trials; band check {within} \
         within / {outside} outside; all ordering properties hold)"
    );
}

#[test]
fn criterion_4_error_bound_check() {
    let bench = analysis::run_bound_benchmark(TRIALS, BASE_SEED).unwrap();

    // Reference magnitudes (squared, on the un-normalized scale of the
    // original experiment) for side-by-side reporting.
    let reference_lhs = [("ground_truth", 0.2618, 0.0236), ("kmeans", 0.3469, 0.0513)];
    #[allow(clippy::approx_constant)] // published std value, coincidentally near log10(2)
    let reference_rhs = [(4usize, 2.9928, 0.5081), (6, 1.1835, 0.3010), (8, 0.4228, 0.0978)];
    for ((strategy, sq, abs), (_, ref_mean, ref_std)) in bench.lhs.iter().zip(reference_lhs) {
        println!(
            "  lhs {strategy}: squared {:.6} +/- {:.6}, normalized {:.6} +/- {:.6} \
             (reference {ref_mean} +/- {ref_std})",
            sq.mean, sq.std, abs.mean, abs.std
        );
    }
    for ((rank, sq, abs), (_, ref_mean, ref_std)) in bench.rhs.iter().zip(reference_rhs) {
        println!(
            "  rhs rank {rank}: squared {:.6} +/- {:.6}, normalized {:.6} +/- {:.6} \
             (reference {ref_mean} +/- {ref_std})",
            sq.mean, sq.std, abs.mean, abs.std
        );
    }

    let mut total_held = 0;
    for c in &bench.condition {
        println!(
            "  condition {}/rank{}: held {}/{} trials, {} bound violations, \
             {} intermediate violations",
            c.strategy,
            c.rank_h,
            c.condition_held,
            c.trials,
            c.bound_violations_under_condition,
            c.residual_bound_violations
        );
        total_held += c.condition_held;
        assert_eq!(
            c.bound_violations_under_condition, 0,
            "{}/rank{}: bound violated while the condition held",
            c.strategy, c.rank_h
        );
        assert_eq!(
            c.residual_bound_violations, 0,
            "{}/rank{}: intermediate bound violated while the condition held",
            c.strategy, c.rank_h
        );
    }
    assert!(total_held > 0, "the condition never held; the check is vacuous");
    assert_eq!(bench.rhs.len(), BOUND_RANKS.len());

    println!(
        "ACCEPTANCE 4 error-bound-check: PASS ({TRIALS} trials, condition held {total_held} \
         times across strategy/rank pairs, zero violations)"
    );
}

#[test]
fn criterion_5_memory_cost_criterion() {
    for mode_len in [20u128, 40] {
        for r0 in [2u128, 4] {
            let r1 = r0 / 4; // floor(r0 / c^(N-1)) with N = 3, c = 2
            let good = tree::memory_cost_bound_check(3, mode_len, 2, r0, r1);
            assert!(
                good.scale1_cheaper,
                "I={mode_len}, r0={r0}, r1={r1}: scale-1 cost {} not below scale-0 cost {}",
                good.scale1_cost, good.scale0_cost
            );
            let bad = tree::memory_cost_bound_check(3, mode_len, 2, r0, r0);
            assert!(
                !bad.scale1_cheaper,
                "I={mode_len}, r0={r0}, r1={r0}: expected the bound to be violated"
            );
        }
    }
    println!(
        "ACCEPTANCE 5 memory-cost-criterion: PASS (exact arithmetic, mode lengths \
         {{20, 40}}, scale-0 ranks {{2, 4}})"
    );
}

#[test]
fn criterion_6_pruning_behavior() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let cfg = TreeConfig {
        clusters_per_mode: vec![2, 2, 2],
        max_scale: 2,
        rank_policy: RankPolicy::PerScale(vec![vec![2; 3], vec![2; 3], vec![1; 3]]),
        strategy: PartitionStrategy::Random,
        seed: 9,
    };

    // Strict objective decrease and root-only behavior on 50 instances.
    for i in 0..50 {
        let t = random_tensor(&[8, 8, 8], &mut rng);
        let result = tree::prune(&t, &cfg, 0.05).unwrap();
        for w in result.objective_trace.windows(2) {
            assert!(w[1] < w[0], "instance {i}: objective not strictly decreasing");
        }
        let huge = tree::prune(&t, &cfg, 1e6).unwrap();
        assert_eq!(huge.tree.nodes().len(), 1, "instance {i}: expected root only");
    }

    // Zero lambda recovers the full tree's error.
    for i in 0..10 {
        let t = random_tensor(&[8, 8, 8], &mut rng);
        let full = tree::build(&t, &cfg).unwrap();
        let full_err =
            t.subtract(&tree::reconstruct_tree(&full, 2).unwrap()).unwrap().norm() / t.norm();
        let pruned = tree::prune(&t, &cfg, 0.0).unwrap();
        assert!(
            (pruned.report.normalized_error - full_err).abs() <= 1e-8,
            "instance {i}: lambda=0 error {} vs full-tree error {full_err}",
            pruned.report.normalized_error
        );
    }

    // Lambda sweep: compression non-increasing, error non-decreasing.
    let (x, _) = analysis::generate_synthetic(BASE_SEED);
    let sweep_cfg = TreeConfig {
        clusters_per_mode: vec![2, 2, 2],
        max_scale: 2,
        rank_policy: RankPolicy::Tau(0.7),
        strategy: PartitionStrategy::KMeans,
        seed: BASE_SEED,
    };
    let lambdas = [0.0, 0.1, 0.25, 0.5, 1.0, 1e6];
    let mut last_compression = f64::INFINITY;
    let mut last_error = 0.0;
    let mut rows = Vec::new();
    for &lambda in &lambdas {
        let r = tree::prune(&x, &sweep_cfg, lambda).unwrap().report;
        assert!(
            r.compression_rate <= last_compression + 1e-12,
            "lambda {lambda}: compression increased"
        );
        assert!(
            r.normalized_error >= last_error - 1e-12,
            "lambda {lambda}: error decreased"
        );
        last_compression = r.compression_rate;
        last_error = r.normalized_error;
        rows.push(format!(
            "lambda {lambda}: error {:.6}, compression {:.6}",
            r.normalized_error, r.compression_rate
        ));
    }
    for row in &rows {
        println!("  {row}");
    }

    println!(
        "ACCEPTANCE 6 pruning-behavior: PASS (50 instances strict decrease and root-only, \
         10 instances lambda=0 equality, monotone lambda sweep)"
    );
}

/// Artifacts covered by the determinism criterion: everything criteria 3-6
/// write, regenerated from scratch.
fn criteria_artifacts() -> Vec<(String, Vec<u8>)> {
    let table4 = analysis::run_error_benchmark(TRIALS, BASE_SEED).unwrap().to_csv();
    let table5 = analysis::run_bound_benchmark(TRIALS, BASE_SEED).unwrap().to_csv();

    let mut memory = Vec::new();
    for mode_len in [20u128, 40] {
        for r0 in [2u128, 4] {
            memory.push(tree::memory_cost_bound_check(3, mode_len, 2, r0, r0 / 4));
            memory.push(tree::memory_cost_bound_check(3, mode_len, 2, r0, r0));
        }
    }
    let memory_json = serde_json::to_vec_pretty(&memory).unwrap();

    let (x, _) = analysis::generate_synthetic(BASE_SEED);
    let sweep_cfg = TreeConfig {
        clusters_per_mode: vec![2, 2, 2],
        max_scale: 2,
        rank_policy: RankPolicy::Tau(0.7),
        strategy: PartitionStrategy::KMeans,
        seed: BASE_SEED,
    };
    let mut sweep = String::from("lambda,error,compression,objective,nodes\n");
    for lambda in [0.0, 0.25, 1e6] {
        let r = tree::prune(&x, &sweep_cfg, lambda).unwrap();
        sweep.push_str(&format!(
            "{lambda},{:.6},{:.6},{:.6},{}\n",
            r.report.normalized_error,
            r.report.compression_rate,
            r.report.objective_h,
            r.tree.nodes().len()
        ));
    }

    vec![
        ("table4.csv".into(), table4.into_bytes()),
        ("table5.csv".into(), table5.into_bytes()),
        ("memory.json".into(), memory_json),
        ("prune_sweep.csv".into(), sweep.into_bytes()),
    ]
}

#[test]
fn criterion_7_determinism() {
    let first = criteria_artifacts();
    let second = criteria_artifacts();
    assert_eq!(first.len(), second.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in first.iter().zip(&second) {
        assert_eq!(name_a, name_b);
        assert_eq!(
            bytes_a, bytes_b,
            "artifact {name_a} differs between identical-seed runs"
        );
    }
    println!(
        "ACCEPTANCE 7 determinism: PASS ({} artifacts byte-identical across two runs)",
        first.len()
    );
}

#[test]
fn criterion_8_feature_pipeline() {
    let data = features::two_class_synthetic(108, &[8, 8], 30, 20);
    let config = features::FeatureConfig {
        clusters_per_mode: vec![2, 2, 1],
        tau: 0.7,
        num_features: 16,
        seed: 108,
    };
    let model = features::fit_features(&data.train, &data.train_labels, &config).unwrap();
    let train_feats = features::transform(&model, &data.train).unwrap();
    let test_feats = features::transform(&model, &data.test).unwrap();
    let predictions = features::knn1_classify(&train_feats, &data.train_labels, &test_feats).unwrap();
    let accuracy = features::accuracy(&predictions, &data.test_labels);
    assert_eq!(accuracy, 1.0, "held-out accuracy {accuracy}");

    // The feature aligned with the planted discriminative directions must
    // rank in the top decile of the Fisher ordering.
    let factors = model.scale0_factors();
    let r0 = factors[0].cols();
    let mut planted_feature = 0;
    let mut best_alignment = 0.0;
    for i in 0..r0 {
        for j in 0..factors[1].cols() {
            let a: f64 = (0..8)
                .map(|r| factors[0].get(r, i) * data.planted[0][r])
                .sum::<f64>()
                .abs();
            let b: f64 = (0..8)
                .map(|r| factors[1].get(r, j) * data.planted[1][r])
                .sum::<f64>()
                .abs();
            if a * b > best_alignment {
                best_alignment = a * b;
                planted_feature = i + r0 * j;
            }
        }
    }
    let mut order: Vec<usize> = (0..model.all_scores.len()).collect();
    order.sort_by(|&a, &b| {
        model.all_scores[b]
            .partial_cmp(&model.all_scores[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let rank = order.iter().position(|&i| i == planted_feature).unwrap();
    let decile = model.all_scores.len().div_ceil(10);
    assert!(
        rank < decile,
        "planted feature ranked {rank} of {} (top decile is {decile})",
        model.all_scores.len()
    );

    println!(
        "ACCEPTANCE 8 feature-pipeline: PASS (held-out 1-nn accuracy {accuracy:.2}, \
         planted feature ranked {rank} of {} extracted features)",
        model.all_scores.len()
    );
}
