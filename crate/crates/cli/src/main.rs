//! `bandit-forge`: run contextual-bandit simulations and bound-coverage
//! studies from the command line, emitting CSV series and static SVG charts.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bandit-forge",
    version,
    about = "Contextual bandits with classification oracles: simulation and coverage studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a multilabel dataset as a bandit problem for one or more policies.
    Simulate(SimulateArgs),
    /// Measure how often resampling-based upper bounds cover true expected values.
    Coverage(CoverageArgs),
    /// Print summary statistics for a dataset.
    DatasetInfo(DatasetSource),
    /// Render an averaged simulation CSV as an SVG line chart.
    RenderSvg(RenderArgs),
}

#[derive(Args, Clone)]
struct DatasetSource {
    /// Path to a dataset in the sparse multilabel format (.gz accepted).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Use the built-in synthetic benchmark instead of a file.
    #[arg(long, conflicts_with = "dataset")]
    synthetic: bool,
    /// Generation seed for --synthetic.
    #[arg(long, default_value_t = 1)]
    synthetic_seed: u64,
    /// Treat label indices in the file as 1-based.
    #[arg(long)]
    one_based_labels: bool,
}

#[derive(Args, Clone)]
struct SimulateArgs {
    #[command(flatten)]
    source: DatasetSource,

    /// Policy to evaluate; repeat the flag or separate names with commas.
    #[arg(long = "policy", required = true)]
    policies: Vec<String>,

    /// RNG seed; falls back to $BANDIT_FORGE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of shuffled runs to average over.
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Rounds between full oracle refits.
    #[arg(long, default_value_t = 50)]
    refit_every: usize,
    /// Update oracles per observation with stochastic steps instead of refits.
    #[arg(long)]
    mini_batch: bool,
    /// L2 regularization strength for the oracles.
    #[arg(long, default_value_t = 1.0)]
    l2_lambda: f64,
    /// Parallel (policy, run) jobs; 0 means one per CPU.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Restrict to a random subset of this many arms.
    #[arg(long)]
    arm_subset: Option<usize>,
    /// Drop the N most frequent labels before simulating.
    #[arg(long)]
    drop_most_common: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Cold-start guard wrapped around oracle scores.
    #[arg(long, default_value = "mab-first", value_parser = ["mab-first", "smoothing", "none"])]
    cold_start: String,
    /// Beta prior alpha for mab-first.
    #[arg(long, default_value_t = 3.0)]
    mab_a: f64,
    /// Beta prior beta for mab-first.
    #[arg(long, default_value_t = 7.0)]
    mab_b: f64,
    /// Observations of each class required before leaving mab-first.
    #[arg(long, default_value_t = 2)]
    mab_m: usize,
    /// Smoothing numerator constant.
    #[arg(long, default_value_t = 1.0)]
    smooth_a: f64,
    /// Smoothing denominator constant.
    #[arg(long, default_value_t = 2.0)]
    smooth_b: f64,

    #[command(flatten)]
    hyper: HyperArgs,
}

/// Per-policy hyperparameters, shared by every policy instance in a run.
#[derive(Args, Clone)]
struct HyperArgs {
    /// Explore probability for epsilon-greedy.
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    /// Per-round multiplicative decay of epsilon.
    #[arg(long, default_value_t = 0.9999)]
    epsilon_decay: f64,
    /// Round at which explore-then-exploit stops exploring.
    #[arg(long, default_value_t = 2000)]
    breakpoint: usize,
    /// Initial logit multiplier for softmax-explorer.
    #[arg(long, default_value_t = 2.0)]
    softmax_multiplier: f64,
    /// Per-round multiplier inflation for softmax-explorer.
    #[arg(long, default_value_t = 1.001)]
    softmax_inflation: f64,
    /// Resample count for bootstrapped policies.
    #[arg(long, default_value_t = 10)]
    resamples: usize,
    /// Prediction percentile used as the UCB score.
    #[arg(long, default_value_t = 80.0)]
    ucb_percentile: f64,
    /// Initial adaptive-greedy threshold; defaults to 1/(2*sqrt(k)).
    #[arg(long)]
    threshold: Option<f64>,
    /// Per-round multiplicative threshold (or window percentile) decay.
    #[arg(long, default_value_t = 0.9997)]
    threshold_decay: f64,
    /// Window length for windowed adaptive-greedy variants.
    #[arg(long, default_value_t = 500)]
    window: usize,
    /// Percentile of windowed best-scores used as the threshold.
    #[arg(long, default_value_t = 30.0)]
    window_percentile: f64,
    /// Recompute the window threshold in disjoint blocks instead of per round.
    #[arg(long)]
    non_moving_window: bool,
    /// Explore probability for active-explorer.
    #[arg(long, default_value_t = 0.15)]
    explore_prob: f64,
    /// Gradient-norm combination rule for active policies.
    #[arg(long, default_value = "weighted", value_parser = ["weighted", "min", "max"])]
    active_criterion: String,
    /// Arm played by the fixed-arm baseline; defaults to the most common label.
    #[arg(long)]
    fixed_arm: Option<usize>,
}

#[derive(Args, Clone)]
struct CoverageArgs {
    /// Data-generating process.
    #[arg(
        long,
        default_value = "logistic-iid",
        value_parser = ["linear-iid", "logistic-iid", "logistic-correlated"]
    )]
    generator: String,
    /// Comma-separated weighting schemes (default: all five).
    #[arg(long)]
    schemes: Option<String>,
    /// Comma-separated training sample sizes (default: the 16-point grid).
    #[arg(long)]
    sizes: Option<String>,
    /// Independent training samples per (size, scheme) cell.
    #[arg(long, default_value_t = 100)]
    n_samples: usize,
    /// Model refits per bound.
    #[arg(long, default_value_t = 10)]
    n_resamples: usize,
    /// Upper-bound percentile.
    #[arg(long, default_value_t = 80.0)]
    percentile: f64,
    /// Test points per sample.
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    /// RNG seed; falls back to $BANDIT_FORGE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel jobs across sample sizes; 0 means one per CPU.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output CSV path.
    #[arg(long, default_value = "coverage.csv")]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct RenderArgs {
    /// Averaged CSV produced by `simulate`.
    #[arg(long)]
    input: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are successful exits; anything else is a config error.
            let code = if e.exit_code() == 0 { 0 } else { 2 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Coverage(args) => commands::coverage(&args),
        Command::DatasetInfo(args) => commands::dataset_info(&args),
        Command::RenderSvg(args) => svg::render(&args.input, &args.output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.code())
        }
    }
}
