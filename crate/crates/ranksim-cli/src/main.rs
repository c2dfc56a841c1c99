//! Experiment CLI: reproducible training runs, config sweeps, synthetic
//! dataset generation, and averaged ranking-matrix extraction.
//!
//! All failures print a machine-readable JSON record to stderr and exit
//! nonzero. Relative output directories are re-rooted under
//! `RANKSIM_OUTPUT_ROOT` when that variable is set.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ranksim::dataset::{generate, load, SkewSpec};
use ranksim::experiment::{
    ranking_matrices_for, resolve_output_dir, run, sweep, ExperimentConfig,
};
use ranksim::model::{Checkpoint, RegressorNet};
use ranksim::similarity::FeatureSimilarityKind;
use ranksim::Error;

#[derive(Parser)]
#[command(name = "ranksim", about = "Imbalanced-regression experiments with ranking-similarity regularization", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one training run from a JSON config.
    Run(RunArgs),
    /// Run every config in a JSON array and aggregate metrics into a CSV.
    Sweep(SweepArgs),
    /// Generate a synthetic dataset (data.csv + spec.json).
    GenData(GenDataArgs),
    /// Compute averaged label/feature ranking matrices for a checkpoint.
    RankMatrices(RankMatricesArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to an ExperimentConfig JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Override the batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Override the base learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Override the regularizer balancing weight (enables the regularizer).
    #[arg(long)]
    gamma: Option<f64>,
    /// Override the interpolation strength (enables the regularizer).
    #[arg(long)]
    lambda: Option<f64>,
    /// Disable the regularizer regardless of the config.
    #[arg(long, conflicts_with_all = ["gamma", "lambda"])]
    no_ranksim: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Path to a JSON array of ExperimentConfig values.
    #[arg(long)]
    configs: PathBuf,
    /// Where the summary CSV goes.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct GenDataArgs {
    /// Path to a SkewSpec JSON file; omit for the default spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Directory for data.csv and spec.json.
    #[arg(long)]
    output: PathBuf,
    /// Override the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RankMatricesArgs {
    /// Model checkpoint JSON.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dataset directory (as written by gen-data).
    #[arg(long)]
    data: PathBuf,
    /// Samples per matrix batch.
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Feature similarity used for the feature-space matrix.
    #[arg(long, default_value = "cosine")]
    feature_sim: String,
    /// Directory for the two CSV grids.
    #[arg(long)]
    output: PathBuf,
}

fn parse_feature_sim(name: &str) -> Result<FeatureSimilarityKind, Error> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| Error::InvalidConfig(format!("unknown feature similarity {name:?}")))
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let mut config = ExperimentConfig::load_json(&args.config)?;
    if let Some(dir) = args.output_dir {
        config.output_dir = Some(dir);
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        config.training.epochs = epochs;
    }
    if let Some(batch) = args.batch_size {
        config.training.batch_size = batch;
    }
    if let Some(lr) = args.lr {
        config.training.lr = lr;
    }
    if args.no_ranksim {
        config.ranksim = None;
    }
    if args.gamma.is_some() || args.lambda.is_some() {
        let mut ranksim = config.ranksim.unwrap_or_default();
        if let Some(gamma) = args.gamma {
            ranksim.gamma = gamma;
        }
        if let Some(lambda) = args.lambda {
            ranksim.lambda = lambda;
        }
        config.ranksim = Some(ranksim);
    }
    config.validate()?;
    let artifacts = run(&config)?;
    println!(
        "{}",
        serde_json::json!({
            "best_epoch": artifacts.best_epoch,
            "val_mae_best": artifacts.epochs.get(artifacts.best_epoch).map(|e| e.val_mae),
            "test_mae_all_best": artifacts.metrics_best.all.mae,
            "output_dir": config.output_dir,
        })
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let file = std::fs::File::open(&args.configs)?;
    let configs: Vec<ExperimentConfig> = serde_json::from_reader(std::io::BufReader::new(file))?;
    if configs.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one config".into()));
    }
    for config in &configs {
        config.validate()?;
    }
    let summary = sweep(&configs);
    let output = resolve_output_dir(&args.output);
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    summary.save_csv(&output)?;
    let failures = summary.rows.iter().filter(|r| r.status != "ok").count();
    println!(
        "{}",
        serde_json::json!({
            "runs": summary.rows.len(),
            "failures": failures,
            "output": output,
        })
    );
    Ok(())
}

fn cmd_gen_data(args: GenDataArgs) -> Result<(), Error> {
    let mut spec: SkewSpec = match &args.spec {
        Some(path) => {
            let file = std::fs::File::open(path)?;
            serde_json::from_reader(std::io::BufReader::new(file))?
        }
        None => SkewSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let dataset = generate(&spec)?;
    let output = resolve_output_dir(&args.output);
    ranksim::dataset::save(&dataset, &output)?;
    println!(
        "{}",
        serde_json::json!({
            "train": dataset.train.len(),
            "val": dataset.val.len(),
            "test": dataset.test.len(),
            "bins": dataset.n_bins(),
            "output": output,
        })
    );
    Ok(())
}

fn cmd_rank_matrices(args: RankMatricesArgs) -> Result<(), Error> {
    let kind = parse_feature_sim(&args.feature_sim)?;
    let checkpoint = Checkpoint::load_json(&args.checkpoint)?;
    let net = RegressorNet::from_checkpoint(&checkpoint)?;
    let dataset = load(&args.data)?;
    let matrices = ranking_matrices_for(&net, &dataset, args.batch_size, kind)?
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "test split ({} samples) is smaller than one batch of {}",
                dataset.test.len(),
                args.batch_size
            ))
        })?;
    let output = resolve_output_dir(&args.output);
    std::fs::create_dir_all(&output)?;
    matrices.save_csv(
        &output.join("label_ranking_matrix.csv"),
        &output.join("feature_ranking_matrix.csv"),
    )?;
    println!(
        "{}",
        serde_json::json!({
            "batch_size": matrices.batch_size,
            "batch_count": matrices.batch_count,
            "output": output,
        })
    );
    Ok(())
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::EmptyVector => "empty_input",
        Error::NonFinite { .. } => "non_finite",
        Error::GradientShapeMismatch { .. } | Error::LengthMismatch { .. } => "shape_mismatch",
        Error::DegenerateVector { .. } | Error::DegenerateCorrelation => "degenerate",
        Error::PairEvaluation { .. } => "pair_evaluation",
        Error::EmptyBinWeight { .. } => "empty_bin",
        Error::Diverged(_) => "diverged",
        Error::InvalidConfig(_) => "invalid_config",
        Error::DimensionMismatch(_) => "dimension_mismatch",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Csv(_) => "csv",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::GenData(args) => cmd_gen_data(args),
        Command::RankMatrices(args) => cmd_rank_matrices(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!(
                "{}",
                serde_json::json!({
                    "error": err.to_string(),
                    "kind": error_kind(&err),
                })
            );
            ExitCode::FAILURE
        }
    }
}
