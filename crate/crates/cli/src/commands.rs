//! Subcommand implementations: simulate, coverage, dataset-info.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};

use rayon::prelude::*;
use serde_json::json;

use bandit_forge::active::ActiveCriterion;
use bandit_forge::coldstart::{MabFirstConfig, SmoothingConfig};
use bandit_forge::coverage::{
    self, linear_iid_spec, logistic_correlated_spec, logistic_iid_spec, GeneratorSpec, SIZE_GRID,
};
use bandit_forge::datasets::{self, MultilabelDataset};
use bandit_forge::policies::{ColdStart, PolicyError, PolicyKind};
use bandit_forge::resampling::WeightScheme;
use bandit_forge::rng::{mix_tags, RngStream};
use bandit_forge::simulator::{
    average_runs, build_policy, run_simulation, MetricsSeries, PolicyConfig, SimConfig,
};

use crate::{CoverageArgs, DatasetSource, SimulateArgs};

pub const SEED_ENV: &str = "BANDIT_FORGE_SEED";

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration: exit code 2.
    Config(String),
    /// Dataset/CSV parse failure: exit code 3.
    Parse(String),
    /// Anything else (I/O, internal): exit code 1.
    Other(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Parse(m) | CliError::Other(m) => f.write_str(m),
        }
    }
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(format!("I/O error: {}", e))
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .parse()
            .map_err(|_| CliError::Config(format!("{} must be an integer, got {:?}", SEED_ENV, v))),
        Err(_) => Ok(0),
    }
}

fn load_dataset(source: &DatasetSource) -> Result<MultilabelDataset, CliError> {
    match (&source.dataset, source.synthetic) {
        (Some(path), false) => datasets::load_xc(path, source.one_based_labels)
            .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e))),
        (None, true) => Ok(datasets::synthetic_benchmark(source.synthetic_seed)),
        _ => Err(CliError::Config(
            "exactly one of --dataset or --synthetic is required".into(),
        )),
    }
}

const POLICY_NAMES: [&str; 14] = [
    "uniform-random",
    "fixed-arm",
    "best-arm-mab",
    "epsilon-greedy",
    "explore-then-exploit",
    "softmax-explorer",
    "bootstrapped-ucb",
    "online-bootstrapped-ucb",
    "bootstrapped-ts",
    "online-bootstrapped-ts",
    "adaptive-greedy",
    "adaptive-greedy-window",
    "active-explorer",
    "active-adaptive-greedy",
];

fn make_kind(
    name: &str,
    args: &SimulateArgs,
    ds: &MultilabelDataset,
) -> Result<PolicyKind, CliError> {
    let h = &args.hyper;
    let threshold = h
        .threshold
        .unwrap_or_else(|| 1.0 / (2.0 * (ds.n_labels as f64).sqrt()));
    let criterion = ActiveCriterion::parse(&h.active_criterion)
        .expect("clap restricts the value set");
    let kind = match name {
        "uniform-random" => PolicyKind::UniformRandom,
        "fixed-arm" => PolicyKind::FixedArm {
            arm: h.fixed_arm.unwrap_or_else(|| ds.most_common_label()),
        },
        "best-arm-mab" => PolicyKind::BestArmMab,
        "epsilon-greedy" => PolicyKind::EpsilonGreedy {
            epsilon: h.epsilon,
            decay: h.epsilon_decay,
        },
        "explore-then-exploit" => PolicyKind::ExploreThenExploit {
            breakpoint: h.breakpoint,
        },
        "softmax-explorer" => PolicyKind::SoftmaxExplorer {
            multiplier: h.softmax_multiplier,
            inflation: h.softmax_inflation,
        },
        "bootstrapped-ucb" => PolicyKind::BootstrappedUcb {
            resamples: h.resamples,
            percentile: h.ucb_percentile,
        },
        "online-bootstrapped-ucb" => PolicyKind::OnlineBootstrappedUcb {
            resamples: h.resamples,
            percentile: h.ucb_percentile,
        },
        "bootstrapped-ts" => PolicyKind::BootstrappedTs {
            resamples: h.resamples,
        },
        "online-bootstrapped-ts" => PolicyKind::OnlineBootstrappedTs {
            resamples: h.resamples,
        },
        "adaptive-greedy" => PolicyKind::AdaptiveGreedy {
            initial_threshold: threshold,
            decay: h.threshold_decay,
        },
        "adaptive-greedy-window" => PolicyKind::AdaptiveGreedyWindow {
            window: h.window,
            percentile: h.window_percentile,
            decay: h.threshold_decay,
            initial_threshold: threshold,
            moving: !h.non_moving_window,
        },
        "active-explorer" => PolicyKind::ActiveExplorer {
            explore_prob: h.explore_prob,
            criterion,
        },
        "active-adaptive-greedy" => PolicyKind::ActiveAdaptiveGreedy {
            window: h.window,
            percentile: h.window_percentile,
            decay: h.threshold_decay,
            initial_threshold: threshold,
            moving: !h.non_moving_window,
            criterion,
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown policy {:?}; valid names: {}",
                other,
                POLICY_NAMES.join(", ")
            )))
        }
    };
    Ok(kind)
}

fn make_cold_start(args: &SimulateArgs) -> Result<ColdStart, CliError> {
    match args.cold_start.as_str() {
        "none" => Ok(ColdStart::None),
        "smoothing" => SmoothingConfig::new(args.smooth_a, args.smooth_b)
            .map(ColdStart::Smoothing)
            .map_err(|e| CliError::Config(e.to_string())),
        "mab-first" => MabFirstConfig::new(args.mab_a, args.mab_b, args.mab_m)
            .map(ColdStart::MabFirst)
            .map_err(|e| CliError::Config(e.to_string())),
        other => Err(CliError::Config(format!("unknown cold start {:?}", other))),
    }
}

fn policy_list(args: &SimulateArgs, ds: &MultilabelDataset) -> Result<Vec<PolicyConfig>, CliError> {
    let cold = make_cold_start(args)?;
    let mut configs = Vec::new();
    let mut seen: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for spec in &args.policies {
        for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let kind = make_kind(name, args, ds)?;
            let n = seen.entry(name.to_string()).or_insert(0);
            *n += 1;
            let label = if *n == 1 {
                name.to_string()
            } else {
                format!("{}#{}", name, n)
            };
            configs.push(PolicyConfig::new(kind, cold).labeled(label));
        }
    }
    if configs.is_empty() {
        return Err(CliError::Config("at least one --policy is required".into()));
    }
    Ok(configs)
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Other(format!("thread pool: {}", e)))
}

fn simulate_manifest(args: &SimulateArgs, seed: u64, labels: &[String]) -> serde_json::Value {
    json!({
        "command": "simulate",
        "dataset": args.source.dataset.as_ref().map(|p| p.display().to_string()),
        "synthetic": args.source.synthetic,
        "synthetic_seed": args.source.synthetic_seed,
        "one_based_labels": args.source.one_based_labels,
        "policies": labels,
        "seed": seed,
        "runs": args.runs,
        "refit_every": args.refit_every,
        "mini_batch": args.mini_batch,
        "l2_lambda": args.l2_lambda,
        "arm_subset": args.arm_subset,
        "drop_most_common": args.drop_most_common,
        "cold_start": {
            "kind": args.cold_start,
            "mab_a": args.mab_a,
            "mab_b": args.mab_b,
            "mab_m": args.mab_m,
            "smooth_a": args.smooth_a,
            "smooth_b": args.smooth_b,
        },
        "hyper": {
            "epsilon": args.hyper.epsilon,
            "epsilon_decay": args.hyper.epsilon_decay,
            "breakpoint": args.hyper.breakpoint,
            "softmax_multiplier": args.hyper.softmax_multiplier,
            "softmax_inflation": args.hyper.softmax_inflation,
            "resamples": args.hyper.resamples,
            "ucb_percentile": args.hyper.ucb_percentile,
            "threshold": args.hyper.threshold,
            "threshold_decay": args.hyper.threshold_decay,
            "window": args.hyper.window,
            "window_percentile": args.hyper.window_percentile,
            "non_moving_window": args.hyper.non_moving_window,
            "explore_prob": args.hyper.explore_prob,
            "active_criterion": args.hyper.active_criterion,
            "fixed_arm": args.hyper.fixed_arm,
        },
    })
}

/// Header comment carried by every output file so any figure can be
/// regenerated from its own header.
fn header_line(seed: u64, manifest: &serde_json::Value) -> String {
    format!("# seed={} config={}", seed, manifest)
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    if args.runs == 0 {
        return Err(CliError::Config("--runs must be at least 1".into()));
    }
    if args.refit_every == 0 {
        return Err(CliError::Config("--refit-every must be at least 1".into()));
    }
    let mut ds = load_dataset(&args.source)?;
    if let Some(n) = args.drop_most_common {
        ds = datasets::drop_most_common(&ds, n)
            .map_err(|e| CliError::Config(e.to_string()))?
            .0;
    }
    if let Some(k) = args.arm_subset {
        let mut rng = RngStream::new(seed, mix_tags(&[0xa51]));
        ds = datasets::restrict_arms(&ds, k, &mut rng)
            .map_err(|e| CliError::Config(e.to_string()))?
            .0;
    }

    let configs = policy_list(args, &ds)?;
    let sim = SimConfig {
        seed,
        n_runs: args.runs,
        refit_every: args.refit_every,
        mini_batch: args.mini_batch,
        l2_lambda: args.l2_lambda,
    };
    // Surface invalid hyperparameters before spawning any work.
    for cfg in &configs {
        build_policy(cfg, &sim, &ds, 0)?;
    }

    let labels: Vec<String> = configs.iter().map(|c| c.label.clone()).collect();
    let manifest = simulate_manifest(args, seed, &labels);
    let header = header_line(seed, &manifest);

    let pairs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|p| (0..args.runs).map(move |r| (p, r)))
        .collect();
    let pool = thread_pool(args.jobs)?;
    let mut results: Vec<((usize, usize), MetricsSeries)> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(p, r)| {
                run_simulation(&ds, &configs[p], &sim, r)
                    .map(|series| ((p, r), series))
                    .map_err(|e| CliError::Other(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    // Deterministic join order regardless of the parallel schedule.
    results.sort_by_key(|&(key, _)| key);

    fs::create_dir_all(&args.out)?;
    let mut averaged: Vec<MetricsSeries> = Vec::new();
    for (p, cfg) in configs.iter().enumerate() {
        let runs: Vec<MetricsSeries> = results
            .iter()
            .filter(|((pi, _), _)| *pi == p)
            .map(|(_, s)| s.clone())
            .collect();
        for (r, series) in runs.iter().enumerate() {
            let path = args.out.join(format!("{}-run{}.csv", cfg.label, r));
            let mut w = BufWriter::new(File::create(path)?);
            writeln!(w, "{}", header)?;
            writeln!(w, "round,cumulative_mean_reward,arm,reward")?;
            for t in 0..series.rounds {
                writeln!(
                    w,
                    "{},{:.10},{},{}",
                    t + 1,
                    series.cumulative_mean[t],
                    series.arms[t],
                    series.rewards[t]
                )?;
            }
        }
        averaged.push(average_runs(&runs).map_err(|e| CliError::Other(e.to_string()))?);
    }

    let avg_path = args.out.join("averaged.csv");
    let mut w = BufWriter::new(File::create(&avg_path)?);
    writeln!(w, "{}", header)?;
    writeln!(w, "round,{}", labels.join(","))?;
    let rounds = averaged.first().map_or(0, |s| s.rounds);
    for t in 0..rounds {
        write!(w, "{}", t + 1)?;
        for s in &averaged {
            write!(w, ",{:.10}", s.cumulative_mean[t])?;
        }
        writeln!(w)?;
    }
    drop(w);

    fs::write(
        args.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;
    println!(
        "wrote {} per-run files, {} and manifest.json to {}",
        configs.len() * args.runs,
        avg_path.display(),
        args.out.display()
    );
    Ok(())
}

pub fn dataset_info(source: &DatasetSource) -> Result<(), CliError> {
    let ds = load_dataset(source)?;
    let counts = ds.label_counts();
    let top = ds.most_common_label();
    let empty = ds.rows.iter().filter(|r| r.labels.is_empty()).count();
    println!("rows: {}", ds.n_rows());
    println!("features: {}", ds.n_features);
    println!("labels: {}", ds.n_labels);
    println!("mean labels per row: {:.4}", ds.mean_labels_per_row());
    println!(
        "most common label: {} ({} rows, {:.2}%)",
        top,
        counts[top],
        100.0 * counts[top] as f64 / ds.n_rows() as f64
    );
    println!("rows with no labels: {}", empty);
    Ok(())
}

fn parse_schemes(arg: &Option<String>) -> Result<Vec<WeightScheme>, CliError> {
    match arg {
        None => Ok(WeightScheme::ALL.to_vec()),
        Some(s) => s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                WeightScheme::parse(t).ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown scheme {:?}; valid: {}",
                        t,
                        WeightScheme::ALL
                            .iter()
                            .map(|w| w.name())
                            .collect::<Vec<_>>()
                            .join(", ")
                    ))
                })
            })
            .collect(),
    }
}

fn parse_sizes(arg: &Option<String>) -> Result<Vec<usize>, CliError> {
    match arg {
        None => Ok(SIZE_GRID.to_vec()),
        Some(s) => s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .ok()
                    .filter(|&n| n >= 2)
                    .ok_or_else(|| CliError::Config(format!("bad sample size {:?}", t)))
            })
            .collect(),
    }
}

fn generator_spec(name: &str) -> Result<GeneratorSpec, CliError> {
    match name {
        "linear-iid" => Ok(linear_iid_spec()),
        "logistic-iid" => Ok(logistic_iid_spec()),
        "logistic-correlated" => Ok(logistic_correlated_spec()),
        other => Err(CliError::Config(format!("unknown generator {:?}", other))),
    }
}

pub fn coverage(args: &CoverageArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed)?;
    if args.n_samples == 0 || args.n_resamples == 0 || args.n_test == 0 {
        return Err(CliError::Config(
            "--n-samples, --n-resamples and --n-test must all be at least 1".into(),
        ));
    }
    if !(0.0..=100.0).contains(&args.percentile) {
        return Err(CliError::Config(format!(
            "--percentile {} outside [0, 100]",
            args.percentile
        )));
    }
    let spec = generator_spec(&args.generator)?;
    let schemes = parse_schemes(&args.schemes)?;
    let sizes = parse_sizes(&args.sizes)?;

    let pool = thread_pool(args.jobs)?;
    // Per-size streams are tag-derived, so splitting the grid across jobs
    // reproduces the single-threaded result exactly.
    let per_size: Vec<coverage::CoverageResult> = pool.install(|| {
        sizes
            .par_iter()
            .map(|&size| {
                coverage::run_coverage(
                    &spec,
                    &schemes,
                    &[size],
                    args.n_samples,
                    args.n_resamples,
                    args.percentile,
                    args.n_test,
                    seed,
                )
                .map_err(|e| CliError::Other(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let manifest = json!({
        "command": "coverage",
        "generator": args.generator,
        "schemes": schemes.iter().map(|s| s.name()).collect::<Vec<_>>(),
        "sizes": sizes,
        "n_samples": args.n_samples,
        "n_resamples": args.n_resamples,
        "percentile": args.percentile,
        "n_test": args.n_test,
        "seed": seed,
    });
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut w = BufWriter::new(File::create(&args.out)?);
    writeln!(w, "{}", header_line(seed, &manifest))?;
    writeln!(w, "sample_size,scheme,mean_pct,std_pct")?;
    for result in &per_size {
        for cell in &result.cells {
            writeln!(
                w,
                "{},{},{:.4},{:.4}",
                cell.size,
                cell.scheme.name(),
                cell.mean_pct,
                cell.std_pct
            )?;
        }
    }
    drop(w);
    println!("wrote {}", args.out.display());
    Ok(())
}
