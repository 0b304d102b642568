//! Evaluation harness: stream dataset rows as rounds, reveal only the chosen
//! arm's reward, track cumulative mean reward, and average over shuffled runs.
//!
//! Every policy sees the same row order within a run index (the shuffle
//! stream depends only on the simulation seed and run index), but consumes
//! its own independent RNG stream so one policy's randomness cannot perturb
//! another's.

use thiserror::Error;

use crate::datasets::{shuffle_rows, DataRow, MultilabelDataset};
use crate::policies::{ColdStart, OracleMode, Policy, PolicyError, PolicyKind};
use crate::rng::{mix_tags, RngStream};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("series length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("cannot aggregate series from different policies: {a:?} vs {b:?}")]
    PolicyMismatch { a: String, b: String },
    #[error("cannot aggregate an empty series list")]
    NoSeries,
}

/// One policy to evaluate: a kind plus its cold-start wrapper, under a
/// display label (kinds can appear more than once with different settings).
#[derive(Clone, Debug)]
pub struct PolicyConfig {
    pub label: String,
    pub kind: PolicyKind,
    pub cold_start: ColdStart,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, cold_start: ColdStart) -> Self {
        Self {
            label: kind.name().to_string(),
            kind,
            cold_start,
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    pub n_runs: usize,
    pub refit_every: usize,
    pub mini_batch: bool,
    pub l2_lambda: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_runs: 10,
            refit_every: 50,
            mini_batch: false,
            l2_lambda: 1.0,
        }
    }
}

impl SimConfig {
    pub fn oracle_mode(&self) -> OracleMode {
        if self.mini_batch {
            OracleMode::MiniBatch
        } else {
            OracleMode::FullRefit {
                refit_every: self.refit_every,
            }
        }
    }
}

/// Per-run metric record. For averaged records `rewards` and `arms` are
/// empty; per-run records carry all three sequences at full length.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsSeries {
    pub policy: String,
    pub rounds: usize,
    pub rewards: Vec<u8>,
    pub arms: Vec<usize>,
    pub cumulative_mean: Vec<f64>,
}

// Stream tags for the simulator's derivations.
const TAG_SHUFFLE: u64 = 0x51;
const TAG_POLICY: u64 = 0x52;

/// FNV-1a of a policy label, used to give each policy its own stream family.
fn label_tag(label: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The shuffle stream for a run index; shared by every policy so all see the
/// same row order.
pub fn shuffle_stream(seed: u64, run_idx: usize) -> RngStream {
    RngStream::new(seed, mix_tags(&[TAG_SHUFFLE, run_idx as u64]))
}

/// The private policy stream for (run index, policy label).
pub fn policy_stream(seed: u64, run_idx: usize, label: &str) -> RngStream {
    RngStream::new(
        seed,
        mix_tags(&[TAG_POLICY, run_idx as u64, label_tag(label)]),
    )
}

/// Build a fresh policy for one run of one configuration.
pub fn build_policy(
    cfg: &PolicyConfig,
    sim: &SimConfig,
    ds: &MultilabelDataset,
    run_idx: usize,
) -> Result<Policy, PolicyError> {
    Policy::new(
        cfg.kind.clone(),
        cfg.cold_start,
        sim.oracle_mode(),
        sim.l2_lambda,
        ds.n_labels,
        ds.n_features,
        policy_stream(sim.seed, run_idx, &cfg.label),
    )
}

/// Play one round: the policy picks an arm, earns 1 iff that arm is in the
/// row's label set, and observes exactly that (x, arm, reward) triple.
pub fn run_round(policy: &mut Policy, row: &DataRow) -> Result<(usize, u8), SimError> {
    let decision = policy.select(&row.x)?;
    let arm = decision.arm;
    let reward = u8::from(row.labels.binary_search(&(arm as u32)).is_ok());
    policy.update(row.x.clone(), arm, reward)?;
    Ok((arm, reward))
}

/// Play every row in order with an already-built policy.
pub fn run_rows(
    policy: &mut Policy,
    label: &str,
    rows: &[DataRow],
) -> Result<MetricsSeries, SimError> {
    let mut rewards = Vec::with_capacity(rows.len());
    let mut arms = Vec::with_capacity(rows.len());
    let mut cumulative_mean = Vec::with_capacity(rows.len());
    let mut total: u64 = 0;
    for (t, row) in rows.iter().enumerate() {
        let (arm, reward) = run_round(policy, row)?;
        total += reward as u64;
        rewards.push(reward);
        arms.push(arm);
        cumulative_mean.push(total as f64 / (t + 1) as f64);
    }
    Ok(MetricsSeries {
        policy: label.to_string(),
        rounds: rows.len(),
        rewards,
        arms,
        cumulative_mean,
    })
}

/// One full pass over the dataset, shuffled for `run_idx`, with fresh policy
/// state.
pub fn run_simulation(
    ds: &MultilabelDataset,
    cfg: &PolicyConfig,
    sim: &SimConfig,
    run_idx: usize,
) -> Result<MetricsSeries, SimError> {
    let shuffled = shuffle_rows(ds, &mut shuffle_stream(sim.seed, run_idx));
    let mut policy = build_policy(cfg, sim, ds, run_idx)?;
    run_rows(&mut policy, &cfg.label, &shuffled.rows)
}

/// Element-wise mean of the cumulative-mean curves across runs.
pub fn average_runs(series: &[MetricsSeries]) -> Result<MetricsSeries, SimError> {
    let first = series.first().ok_or(SimError::NoSeries)?;
    for s in &series[1..] {
        if s.policy != first.policy {
            return Err(SimError::PolicyMismatch {
                a: first.policy.clone(),
                b: s.policy.clone(),
            });
        }
        if s.rounds != first.rounds {
            return Err(SimError::LengthMismatch {
                a: first.rounds,
                b: s.rounds,
            });
        }
    }
    let n = series.len() as f64;
    let cumulative_mean = (0..first.rounds)
        .map(|t| series.iter().map(|s| s.cumulative_mean[t]).sum::<f64>() / n)
        .collect();
    Ok(MetricsSeries {
        policy: first.policy.clone(),
        rounds: first.rounds,
        rewards: Vec::new(),
        arms: Vec::new(),
        cumulative_mean,
    })
}
