//! Command-line front end: decompose, reconstruct, prune, verify, bench,
//! and a feature-pipeline demo. Every command is deterministic given its
//! flags and seed, and each artifact-producing run writes a config file next
//! to its outputs so results are reproducible from the artifacts alone.

use clap::{Args, Parser, Subcommand, ValueEnum};
use mshosvd::analysis;
use mshosvd::error::Error;
use mshosvd::features;
use mshosvd::io;
use mshosvd::tensor::{DenseTensor, Matrix};
use mshosvd::tree::{self, PartitionStrategy, RankPolicy, TreeConfig};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_IO: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

#[derive(Parser)]
#[command(name = "mshosvd", version, about = "Multiscale tensor decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a multiscale decomposition tree and write it as an archive.
    Decompose(DecomposeArgs),
    /// Reconstruct a tensor from a tree archive up to a scale.
    Reconstruct(ReconstructArgs),
    /// Build a pruned tree minimizing error + lambda * compression.
    Prune(PruneArgs),
    /// Run the numerical verification suites.
    Verify(VerifyArgs),
    /// Run a synthetic benchmark table and emit CSV.
    Bench(BenchArgs),
    /// Fit and evaluate the feature pipeline on a synthetic two-class set.
    Features(FeaturesArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Tensor file to read.
    #[arg(long, conflicts_with = "synth")]
    input: Option<PathBuf>,
    /// Generate the planted-blocks synthetic tensor with this seed instead
    /// of reading a file.
    #[arg(long)]
    synth: Option<u64>,
}

#[derive(Args)]
struct TreeArgs {
    /// Cluster counts per mode, e.g. 2,2,2.
    #[arg(long)]
    clusters: Option<String>,
    /// Energy threshold in (0, 1] applied at every scale.
    #[arg(long, conflicts_with = "ranks")]
    tau: Option<f64>,
    /// Explicit per-scale ranks, e.g. 2,2,2/4,4,4 for scales 0 and 1.
    #[arg(long)]
    ranks: Option<String>,
    /// Highest scale of the tree.
    #[arg(long, default_value_t = 1)]
    max_scale: usize,
    /// Seed for clustering and any random partitioning.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Partitioning strategy.
    #[arg(long, value_enum, default_value_t = PartitionerArg::Kmeans)]
    partitioner: PartitionerArg,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum PartitionerArg {
    Kmeans,
    Random,
    GroundTruth,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tree: TreeArgs,
    /// Directory for the tree archive and reports.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Tree archive directory.
    #[arg(long)]
    tree: PathBuf,
    /// Reconstruct using scales 0..=scale.
    #[arg(long)]
    scale: usize,
    /// Output tensor file.
    #[arg(long)]
    output: PathBuf,
    /// Optional original tensor; when given, the normalized error is printed.
    #[arg(long)]
    original: Option<PathBuf>,
}

#[derive(Args)]
struct PruneArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tree: TreeArgs,
    /// Trade-off weight on the compression rate.
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Suite {
    Algebra,
    Theory,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Randomized instances (algebra) or synthetic trials (theory).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Test hook: corrupt one check to confirm failures are reported.
    #[arg(long, hide = true)]
    inject_bug: bool,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Table {
    Table4,
    Table5,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    table: Table,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Features kept after ranking.
    #[arg(long, default_value_t = 16)]
    num_features: usize,
    /// Optional JSON summary destination.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Optional directory for the serialized feature model.
    #[arg(long)]
    model_dir: Option<PathBuf>,
}

/// Resolved settings written next to every artifact-producing run.
#[derive(Serialize)]
struct RunConfig {
    command: String,
    input: Option<String>,
    synth_seed: Option<u64>,
    config: Option<TreeConfig>,
    lambda: Option<f64>,
    trials: Option<usize>,
    seed: Option<u64>,
    num_features: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn invariant(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INVARIANT,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) | Error::Format(_) => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Decompose(args) => decompose(args),
        Command::Reconstruct(args) => reconstruct(args),
        Command::Prune(args) => prune(args),
        Command::Verify(args) => verify(args),
        Command::Bench(args) => bench(args),
        Command::Features(args) => features_demo(args),
    }
}

// ---------------------------------------------------------------------------
// decompose / prune / reconstruct
// ---------------------------------------------------------------------------

type LoadedInput = (DenseTensor, Option<Vec<Vec<usize>>>, Option<u64>);

fn load_input(input: &InputArgs) -> Result<LoadedInput, CliError> {
    match (&input.input, input.synth) {
        (Some(path), None) => Ok((io::load_tensor(path)?, None, None)),
        (None, Some(seed)) => {
            let (t, spec) = analysis::generate_synthetic(seed);
            Ok((t, Some(spec.labels().to_vec()), Some(seed)))
        }
        _ => Err(CliError::config(
            "exactly one of --input or --synth is required",
        )),
    }
}

fn resolve_tree_config(
    args: &TreeArgs,
    shape_len: usize,
    ground_truth: Option<Vec<Vec<usize>>>,
) -> Result<TreeConfig, CliError> {
    let clusters = match &args.clusters {
        Some(s) => parse_usize_list(s).map_err(CliError::config)?,
        None => vec![2; shape_len],
    };
    let rank_policy = match (&args.ranks, args.tau) {
        (Some(ranks), None) => {
            RankPolicy::PerScale(parse_rank_scales(ranks).map_err(CliError::config)?)
        }
        (None, Some(tau)) => RankPolicy::Tau(tau),
        (None, None) => RankPolicy::Tau(0.7),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let strategy = match args.partitioner {
        PartitionerArg::Kmeans => PartitionStrategy::KMeans,
        PartitionerArg::Random => PartitionStrategy::Random,
        PartitionerArg::GroundTruth => {
            let labels = ground_truth.ok_or_else(|| {
                CliError::config("--partitioner ground-truth requires --synth input")
            })?;
            PartitionStrategy::GroundTruth(labels)
        }
    };
    Ok(TreeConfig {
        clusters_per_mode: clusters,
        max_scale: args.max_scale,
        rank_policy,
        strategy,
        seed: args.seed,
    })
}

fn write_run_config(path: &Path, config: &RunConfig) -> Result<(), CliError> {
    let json = serde_json::to_vec_pretty(config)
        .map_err(|e| CliError::invariant(format!("config encoding: {e}")))?;
    std::fs::write(path, json).map_err(|e| CliError::from(Error::Io(e)))?;
    Ok(())
}

fn decompose(args: DecomposeArgs) -> Result<(), CliError> {
    let (tensor, gt, synth_seed) = load_input(&args.input)?;
    let config = resolve_tree_config(&args.tree, tensor.ndim(), gt)?;
    let tree = tree::build(&tensor, &config)?;
    let report = tree::cost_report(&tree, &tensor, 0.0)?;

    std::fs::create_dir_all(&args.output).map_err(|e| CliError::from(Error::Io(e)))?;
    io::save_tree(&args.output, &tree)?;
    write_json(&args.output.join("report.json"), &report)?;
    write_run_config(
        &args.output.join("run_config.json"),
        &RunConfig {
            command: "decompose".into(),
            input: args.input.input.map(|p| p.display().to_string()),
            synth_seed,
            config: Some(config),
            lambda: None,
            trials: None,
            seed: None,
            num_features: None,
        },
    )?;
    println!(
        "decomposed: {} nodes, error {:.6}, compression {:.6}",
        tree.nodes().len(),
        report.normalized_error,
        report.compression_rate
    );
    Ok(())
}

fn prune(args: PruneArgs) -> Result<(), CliError> {
    let (tensor, gt, synth_seed) = load_input(&args.input)?;
    let config = resolve_tree_config(&args.tree, tensor.ndim(), gt)?;
    let result = tree::prune(&tensor, &config, args.lambda)?;

    std::fs::create_dir_all(&args.output).map_err(|e| CliError::from(Error::Io(e)))?;
    io::save_tree(&args.output, &result.tree)?;
    write_json(&args.output.join("report.json"), &result.report)?;
    write_run_config(
        &args.output.join("run_config.json"),
        &RunConfig {
            command: "prune".into(),
            input: args.input.input.map(|p| p.display().to_string()),
            synth_seed,
            config: Some(config),
            lambda: Some(args.lambda),
            trials: None,
            seed: None,
            num_features: None,
        },
    )?;
    println!(
        "pruned: {} nodes, error {:.6}, compression {:.6}, objective {:.6}",
        result.tree.nodes().len(),
        result.report.normalized_error,
        result.report.compression_rate,
        result.report.objective_h
    );
    Ok(())
}

fn reconstruct(args: ReconstructArgs) -> Result<(), CliError> {
    let tree = io::load_tree(&args.tree)?;
    let out = tree::reconstruct_tree(&tree, args.scale)?;
    io::save_tensor(&args.output, &out)?;
    if let Some(original) = args.original {
        let x = io::load_tensor(original)?;
        let err = x.subtract(&out).map_err(CliError::from)?.norm() / x.norm().max(f64::MIN_POSITIVE);
        println!("scale {} error {err:.6}", args.scale);
    } else {
        println!("reconstructed through scale {}", args.scale);
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let json = serde_json::to_vec_pretty(value)
        .map_err(|e| CliError::invariant(format!("json encoding: {e}")))?;
    std::fs::write(path, json).map_err(|e| CliError::from(Error::Io(e)))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct CheckOutcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verify(args: VerifyArgs) -> Result<(), CliError> {
    let outcomes = match args.suite {
        Suite::Algebra => algebra_suite(args.trials.unwrap_or(200), args.seed, args.inject_bug),
        Suite::Theory => theory_suite(args.trials.unwrap_or(20), args.seed, args.inject_bug)?,
    };
    let mut all_pass = true;
    for o in &outcomes {
        println!(
            "{}: {} ({})",
            o.name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        all_pass &= o.pass;
    }
    if all_pass {
        Ok(())
    } else {
        Err(CliError::invariant("verification suite reported failures"))
    }
}

fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    let n: usize = shape.iter().product();
    DenseTensor::new(shape.to_vec(), (0..n).map(|_| gaussian(rng)).collect()).unwrap()
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_col_major(rows, cols, (0..rows * cols).map(|_| gaussian(rng)).collect()).unwrap()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
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

fn algebra_suite(instances: usize, seed: u64, inject_bug: bool) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-9;
    let mut outcomes = Vec::new();

    let mut run = |name: &'static str, mut f: Box<dyn FnMut(&mut ChaCha8Rng) -> f64>| {
        let mut max_err = 0.0f64;
        for _ in 0..instances {
            max_err = max_err.max(f(&mut rng));
        }
        outcomes.push(CheckOutcome {
            name,
            pass: max_err <= tol,
            detail: format!("{instances} instances, max relative error {max_err:.3e}"),
        });
    };

    run(
        "algebra/mode-product-linearity",
        Box::new(|rng| {
            let x = random_tensor(&[3, 4, 2], rng);
            let y = random_tensor(&[3, 4, 2], rng);
            let u = random_matrix(5, 4, rng);
            let (a, b) = (gaussian(rng), gaussian(rng));
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
            relative_gap(&lhs, &rhs)
        }),
    );

    run(
        "algebra/mode-product-commutation",
        Box::new(|rng| {
            let x = random_tensor(&[3, 4, 2], rng);
            let u = random_matrix(2, 4, rng);
            let v = random_matrix(4, 2, rng);
            let a = x.mode_product(&u, 1).unwrap().mode_product(&v, 2).unwrap();
            let b = x.mode_product(&v, 2).unwrap().mode_product(&u, 1).unwrap();
            let c = x.mode_product(&u, 1).unwrap();
            let w = random_matrix(3, 2, rng);
            let composed = c.mode_product(&w, 1).unwrap();
            let direct = x.mode_product(&w.matmul(&u).unwrap(), 1).unwrap();
            relative_gap(&a, &b).max(relative_gap(&composed, &direct))
        }),
    );

    run(
        "algebra/matricization-isometry",
        Box::new(|rng| {
            let x = random_tensor(&[4, 3, 3], rng);
            let mut worst = 0.0f64;
            for mode in 0..3 {
                let f = x.unfold(mode).unwrap().frobenius_norm();
                worst = worst.max((f - x.norm()).abs() / (1.0 + x.norm()));
            }
            worst
        }),
    );

    let bug = inject_bug;
    run(
        "algebra/kronecker-unfolding-identity",
        Box::new(move |rng| {
            let shape = [3usize, 2, 3];
            let x = random_tensor(&shape, rng);
            let us: Vec<Matrix> = shape.iter().map(|&d| random_matrix(d, d, rng)).collect();
            let mut y = x.clone();
            for (mode, u) in us.iter().enumerate() {
                y = y.mode_product(u, mode).unwrap();
            }
            let mut worst = 0.0f64;
            for mode in 0..shape.len() {
                let mut kron: Option<Matrix> = None;
                let order: Vec<usize> = if bug {
                    // Deliberately wrong factor order for the test hook.
                    (0..shape.len()).filter(|&m| m != mode).collect()
                } else {
                    (0..shape.len()).rev().filter(|&m| m != mode).collect()
                };
                for m in order {
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
            }
            worst
        }),
    );

    run(
        "algebra/orthogonal-split",
        Box::new(|rng| {
            let x = random_tensor(&[4, 5, 3], rng);
            let raw = random_matrix(5, 2, rng);
            let s = mshosvd::linalg::svd(&raw).unwrap();
            let u = mshosvd::linalg::truncate(&s, 2).unwrap();
            let p = u.matmul(&u.transpose()).unwrap();
            let xp = x.mode_product(&p, 1).unwrap();
            let xq = x.subtract(&xp).unwrap();
            let cross = xp.inner_product(&xq).unwrap().abs();
            let pythag = (xp.norm().powi(2) + xq.norm().powi(2) - x.norm().powi(2)).abs();
            (cross + pythag) / (1.0 + x.norm().powi(2))
        }),
    );

    run(
        "algebra/fold-unfold-round-trip",
        Box::new(|rng| {
            let x = random_tensor(&[3, 2, 4], rng);
            let mut worst = 0.0f64;
            for mode in 0..3 {
                let back =
                    mshosvd::tensor::fold(&x.unfold(mode).unwrap(), mode, x.shape()).unwrap();
                if back != x {
                    worst = 1.0;
                }
            }
            worst
        }),
    );

    outcomes
}

fn theory_suite(trials: usize, seed: u64, inject_bug: bool) -> Result<Vec<CheckOutcome>, CliError> {
    let mut outcomes = Vec::new();

    let bound = analysis::run_bound_benchmark(trials, seed)?;
    let held: usize = bound.condition.iter().map(|c| c.condition_held).sum();
    let mut violations: usize = bound
        .condition
        .iter()
        .map(|c| c.bound_violations_under_condition)
        .sum();
    let residual_violations: usize = bound
        .condition
        .iter()
        .map(|c| c.residual_bound_violations)
        .sum();
    if inject_bug {
        violations += 1;
    }
    outcomes.push(CheckOutcome {
        name: "theory/first-scale-error-bound",
        pass: violations == 0,
        detail: format!(
            "{trials} trials, condition held {held} times, {violations} bound violations"
        ),
    });
    outcomes.push(CheckOutcome {
        name: "theory/residual-projection-bound",
        pass: residual_violations == 0,
        detail: format!("{residual_violations} intermediate-bound violations"),
    });

    let mut memory_ok = true;
    for mode_len in [20u128, 40] {
        for r0 in [2u128, 4] {
            let r1 = r0 / 4; // c^(N-1) = 4 for N = 3, c = 2
            let good = tree::memory_cost_bound_check(3, mode_len, 2, r0, r1);
            let bad = tree::memory_cost_bound_check(3, mode_len, 2, r0, r0);
            memory_ok &= good.scale1_cheaper && !bad.scale1_cheaper;
        }
    }
    outcomes.push(CheckOutcome {
        name: "theory/storage-growth-criterion",
        pass: memory_ok,
        detail: "exact arithmetic over mode lengths {20, 40} and ranks {2, 4}".into(),
    });

    Ok(outcomes)
}

fn relative_gap(a: &DenseTensor, b: &DenseTensor) -> f64 {
    a.subtract(b).unwrap().norm() / (1.0 + b.norm())
}

// ---------------------------------------------------------------------------
// bench / features
// ---------------------------------------------------------------------------

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let csv = match args.table {
        Table::Table4 => analysis::run_error_benchmark(args.trials, args.seed)?.to_csv(),
        Table::Table5 => analysis::run_bound_benchmark(args.trials, args.seed)?.to_csv(),
    };
    match &args.output {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| CliError::from(Error::Io(e)))?;
            let config_path = path.with_extension("config.json");
            write_run_config(
                &config_path,
                &RunConfig {
                    command: format!(
                        "bench-{}",
                        match args.table {
                            Table::Table4 => "table4",
                            Table::Table5 => "table5",
                        }
                    ),
                    input: None,
                    synth_seed: None,
                    config: None,
                    lambda: None,
                    trials: Some(args.trials),
                    seed: Some(args.seed),
                    num_features: None,
                },
            )?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct FeatureDemoReport {
    num_features: usize,
    knn_accuracy: f64,
    naive_bayes_accuracy: f64,
}

fn features_demo(args: FeaturesArgs) -> Result<(), CliError> {
    let data = features::two_class_synthetic(args.seed, &[8, 8], 30, 20);
    let config = features::FeatureConfig {
        clusters_per_mode: vec![2, 2, 1],
        tau: 0.7,
        num_features: args.num_features,
        seed: args.seed,
    };
    let model = features::fit_features(&data.train, &data.train_labels, &config)?;
    if model.was_clamped() {
        eprintln!(
            "warning: requested {} features, only {} available",
            args.num_features,
            model.num_features()
        );
    }
    let train_feats = features::transform(&model, &data.train)?;
    let test_feats = features::transform(&model, &data.test)?;
    let knn = features::knn1_classify(&train_feats, &data.train_labels, &test_feats)?;
    let bayes = features::naive_bayes_classify(&train_feats, &data.train_labels, &test_feats)?;
    let report = FeatureDemoReport {
        num_features: model.num_features(),
        knn_accuracy: features::accuracy(&knn, &data.test_labels),
        naive_bayes_accuracy: features::accuracy(&bayes, &data.test_labels),
    };
    println!(
        "features: {} kept, 1-nn accuracy {:.4}, naive bayes accuracy {:.4}",
        report.num_features, report.knn_accuracy, report.naive_bayes_accuracy
    );
    if let Some(path) = args.output {
        write_json(&path, &report)?;
    }
    if let Some(dir) = args.model_dir {
        features::save_model(&dir, &model)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// flag parsing
// ---------------------------------------------------------------------------

fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_rank_scales(s: &str) -> Result<Vec<Vec<usize>>, String> {
    s.split('/').map(parse_usize_list).collect()
}
