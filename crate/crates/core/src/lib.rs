//! Contextual bandits with binary classification oracles.
//!
//! Each arm is backed by an independent logistic-regression oracle estimating
//! `P(reward = 1 | context)`. Arm-selection policies range from epsilon-greedy
//! baselines to bootstrapped upper-confidence-bound and Thompson-sampling
//! strategies (with both full-refit and online approximate-bootstrap variants)
//! and active-learning heuristics based on per-observation gradient norms.
//!
//! The [`simulator`] module replays multilabel classification datasets as
//! bandit problems: labels become arms and a round's reward is whether the
//! chosen label applies to the presented observation. The [`coverage`] module
//! measures how often upper confidence bounds built from small numbers of
//! resamples actually cover the true expected value, for each resampling or
//! reweighting scheme.

pub mod active;
pub mod coldstart;
pub mod context;
pub mod coverage;
pub mod datasets;
pub mod oracle;
pub mod policies;
pub mod resampling;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use context::Context;
pub use oracle::{ArmHistory, OracleModel};
pub use policies::{ColdStart, Decision, OracleMode, Policy, PolicyKind};
pub use rng::RngStream;
