//! Arm-selection policies behind a single select/update contract.
//!
//! All policies share the same skeleton: per-arm histories and oracle models,
//! a cold-start wrapper around per-arm scores, and a round counter. They
//! differ in how scores turn into a chosen arm (greedy, softmax-sampled,
//! threshold-gated, percentile-of-resamples, ...) and in how oracles are kept
//! up to date (batched full refits every `refit_every` rounds, or immediate
//! stochastic updates for the online variants).

use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::active::{active_score, ActiveCriterion};
use crate::coldstart::{self, MabFirstConfig, SmoothingConfig};
use crate::context::Context;
use crate::oracle::{self, ArmHistory, HistoryRow, OracleError, OracleModel};
use crate::resampling::{self, ResampleError, WeightScheme};
use crate::rng::RngStream;
use crate::stats::percentile;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid policy configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Resample(#[from] ResampleError),
}

/// Cold-start wrapper applied around each arm's contextual score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ColdStart {
    None,
    Smoothing(SmoothingConfig),
    MabFirst(MabFirstConfig),
}

/// How oracles are brought up to date after new observations.
///
/// The online-bootstrap policy kinds always update per observation as part of
/// their definition and ignore this setting; the full-bootstrap kinds always
/// batch refits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleMode {
    FullRefit { refit_every: usize },
    MiniBatch,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PolicyKind {
    /// Uniform-random baseline.
    UniformRandom,
    /// Always plays one arm; anchor for dataset statistics.
    FixedArm { arm: usize },
    /// Context-free Thompson sampling on Beta(1 + n_pos, 1 + n_neg).
    BestArmMab,
    EpsilonGreedy {
        epsilon: f64,
        decay: f64,
    },
    ExploreThenExploit {
        breakpoint: usize,
    },
    SoftmaxExplorer {
        multiplier: f64,
        inflation: f64,
    },
    BootstrappedUcb {
        resamples: usize,
        percentile: f64,
    },
    OnlineBootstrappedUcb {
        resamples: usize,
        percentile: f64,
    },
    BootstrappedTs {
        resamples: usize,
    },
    OnlineBootstrappedTs {
        resamples: usize,
    },
    AdaptiveGreedy {
        initial_threshold: f64,
        decay: f64,
    },
    AdaptiveGreedyWindow {
        window: usize,
        percentile: f64,
        decay: f64,
        initial_threshold: f64,
        moving: bool,
    },
    ActiveExplorer {
        explore_prob: f64,
        criterion: ActiveCriterion,
    },
    ActiveAdaptiveGreedy {
        window: usize,
        percentile: f64,
        decay: f64,
        initial_threshold: f64,
        moving: bool,
        criterion: ActiveCriterion,
    },
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::UniformRandom => "uniform-random",
            PolicyKind::FixedArm { .. } => "fixed-arm",
            PolicyKind::BestArmMab => "best-arm-mab",
            PolicyKind::EpsilonGreedy { .. } => "epsilon-greedy",
            PolicyKind::ExploreThenExploit { .. } => "explore-then-exploit",
            PolicyKind::SoftmaxExplorer { .. } => "softmax-explorer",
            PolicyKind::BootstrappedUcb { .. } => "bootstrapped-ucb",
            PolicyKind::OnlineBootstrappedUcb { .. } => "online-bootstrapped-ucb",
            PolicyKind::BootstrappedTs { .. } => "bootstrapped-ts",
            PolicyKind::OnlineBootstrappedTs { .. } => "online-bootstrapped-ts",
            PolicyKind::AdaptiveGreedy { .. } => "adaptive-greedy",
            PolicyKind::AdaptiveGreedyWindow { .. } => "adaptive-greedy-window",
            PolicyKind::ActiveExplorer { .. } => "active-explorer",
            PolicyKind::ActiveAdaptiveGreedy { .. } => "active-adaptive-greedy",
        }
    }

    fn n_models(&self) -> usize {
        match self {
            PolicyKind::UniformRandom | PolicyKind::FixedArm { .. } | PolicyKind::BestArmMab => 0,
            PolicyKind::BootstrappedUcb { resamples, .. }
            | PolicyKind::OnlineBootstrappedUcb { resamples, .. }
            | PolicyKind::BootstrappedTs { resamples }
            | PolicyKind::OnlineBootstrappedTs { resamples } => *resamples,
            _ => 1,
        }
    }

    fn is_online_bootstrap(&self) -> bool {
        matches!(
            self,
            PolicyKind::OnlineBootstrappedUcb { .. } | PolicyKind::OnlineBootstrappedTs { .. }
        )
    }

    fn is_full_bootstrap(&self) -> bool {
        matches!(
            self,
            PolicyKind::BootstrappedUcb { .. } | PolicyKind::BootstrappedTs { .. }
        )
    }

    fn validate(&self, n_arms: usize) -> Result<(), PolicyError> {
        let bad = |msg: String| Err(PolicyError::InvalidConfig(msg));
        match self {
            PolicyKind::FixedArm { arm } if *arm >= n_arms => {
                bad(format!("fixed arm {} out of range for {} arms", arm, n_arms))
            }
            PolicyKind::EpsilonGreedy { epsilon, decay } => {
                if !(0.0..=1.0).contains(epsilon) {
                    bad(format!("epsilon {} outside [0, 1]", epsilon))
                } else if !(*decay > 0.0 && *decay <= 1.0) {
                    bad(format!("decay {} outside (0, 1]", decay))
                } else {
                    Ok(())
                }
            }
            PolicyKind::SoftmaxExplorer {
                multiplier,
                inflation,
            } => {
                if *multiplier <= 0.0 || *inflation <= 0.0 {
                    bad("softmax multiplier and inflation must be positive".into())
                } else {
                    Ok(())
                }
            }
            PolicyKind::BootstrappedUcb {
                resamples,
                percentile,
            }
            | PolicyKind::OnlineBootstrappedUcb {
                resamples,
                percentile,
            } => {
                if *resamples < 1 {
                    bad("resample count must be at least 1".into())
                } else if !(0.0..=100.0).contains(percentile) {
                    bad(format!("percentile {} outside [0, 100]", percentile))
                } else {
                    Ok(())
                }
            }
            PolicyKind::BootstrappedTs { resamples }
            | PolicyKind::OnlineBootstrappedTs { resamples } => {
                if *resamples < 1 {
                    bad("resample count must be at least 1".into())
                } else {
                    Ok(())
                }
            }
            PolicyKind::AdaptiveGreedy {
                initial_threshold,
                decay,
            } => {
                if !(*initial_threshold > 0.0 && *initial_threshold < 1.0) {
                    bad(format!("threshold {} outside (0, 1)", initial_threshold))
                } else if !(*decay > 0.0 && *decay <= 1.0) {
                    bad(format!("decay {} outside (0, 1]", decay))
                } else {
                    Ok(())
                }
            }
            PolicyKind::AdaptiveGreedyWindow {
                window,
                percentile,
                decay,
                initial_threshold,
                ..
            }
            | PolicyKind::ActiveAdaptiveGreedy {
                window,
                percentile,
                decay,
                initial_threshold,
                ..
            } => {
                if *window < 1 {
                    bad("window size must be at least 1".into())
                } else if !(0.0..=100.0).contains(percentile) {
                    bad(format!("percentile {} outside [0, 100]", percentile))
                } else if !(*decay > 0.0 && *decay <= 1.0) {
                    bad(format!("decay {} outside (0, 1]", decay))
                } else if !(*initial_threshold > 0.0 && *initial_threshold < 1.0) {
                    bad(format!("threshold {} outside (0, 1)", initial_threshold))
                } else {
                    Ok(())
                }
            }
            PolicyKind::ActiveExplorer { explore_prob, .. } => {
                if !(0.0..=1.0).contains(explore_prob) {
                    bad(format!("explore probability {} outside [0, 1]", explore_prob))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Which rule produced a decision; kept for auditing and tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Greedy,
    Random,
    Sampled,
    Active,
    Fixed,
}

/// One round's choice, with the per-arm scores that led to it when the
/// deciding rule was score-based.
#[derive(Clone, Debug)]
pub struct Decision {
    pub arm: usize,
    pub scores: Option<Vec<f64>>,
    pub branch: Branch,
}

struct ArmSlot {
    history: ArmHistory,
    models: Vec<OracleModel>,
    score_rng: RngStream,
    weight_rng: RngStream,
    refit_count: u64,
}

// Stream-derivation tags.
const TAG_SELECT: u64 = 1;
const TAG_ARM_SCORE: u64 = 2;
const TAG_ARM_WEIGHT: u64 = 3;
const TAG_REFIT: u64 = 4;

/// A policy's full mutable state for one run.
pub struct Policy {
    kind: PolicyKind,
    cold_start: ColdStart,
    oracle_mode: OracleMode,
    l2_lambda: f64,
    n_arms: usize,
    dim: usize,
    arms: Vec<ArmSlot>,
    dirty: Vec<bool>,
    round: usize,
    epsilon: f64,
    multiplier: f64,
    threshold: f64,
    window_percentile: f64,
    window: VecDeque<f64>,
    base_rng: RngStream,
    select_rng: RngStream,
}

impl Policy {
    pub fn new(
        kind: PolicyKind,
        cold_start: ColdStart,
        oracle_mode: OracleMode,
        l2_lambda: f64,
        n_arms: usize,
        dim: usize,
        rng: RngStream,
    ) -> Result<Policy, PolicyError> {
        if n_arms == 0 {
            return Err(PolicyError::InvalidConfig("need at least one arm".into()));
        }
        if kind.n_models() > 0 && l2_lambda <= 0.0 {
            return Err(PolicyError::InvalidConfig(format!(
                "regularization strength must be positive, got {}",
                l2_lambda
            )));
        }
        if let OracleMode::FullRefit { refit_every } = oracle_mode {
            if refit_every == 0 {
                return Err(PolicyError::InvalidConfig("refit interval must be >= 1".into()));
            }
        }
        kind.validate(n_arms)?;

        let n_models = kind.n_models();
        let arms = (0..n_arms)
            .map(|a| ArmSlot {
                history: ArmHistory::new(),
                models: (0..n_models)
                    .map(|_| OracleModel::unfitted(dim, l2_lambda))
                    .collect(),
                score_rng: rng.derive_tagged(&[TAG_ARM_SCORE, a as u64]),
                weight_rng: rng.derive_tagged(&[TAG_ARM_WEIGHT, a as u64]),
                refit_count: 0,
            })
            .collect();

        let (epsilon, multiplier, threshold, window_percentile) = match &kind {
            PolicyKind::EpsilonGreedy { epsilon, .. } => (*epsilon, 0.0, 0.0, 0.0),
            PolicyKind::SoftmaxExplorer { multiplier, .. } => (0.0, *multiplier, 0.0, 0.0),
            PolicyKind::AdaptiveGreedy {
                initial_threshold, ..
            } => (0.0, 0.0, *initial_threshold, 0.0),
            PolicyKind::AdaptiveGreedyWindow {
                initial_threshold,
                percentile,
                ..
            }
            | PolicyKind::ActiveAdaptiveGreedy {
                initial_threshold,
                percentile,
                ..
            } => (0.0, 0.0, *initial_threshold, *percentile),
            _ => (0.0, 0.0, 0.0, 0.0),
        };

        Ok(Policy {
            select_rng: rng.derive(TAG_SELECT),
            base_rng: rng,
            kind,
            cold_start,
            oracle_mode,
            l2_lambda,
            n_arms,
            dim,
            arms,
            dirty: vec![false; n_arms],
            round: 0,
            epsilon,
            multiplier,
            threshold,
            window_percentile,
            window: VecDeque::new(),
        })
    }

    pub fn kind(&self) -> &PolicyKind {
        &self.kind
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Current explore probability (epsilon-greedy).
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Current softmax logit multiplier.
    pub fn multiplier(&self) -> f64 {
        self.multiplier
    }

    /// Current adaptive-greedy threshold.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn arm_history(&self, arm: usize) -> &ArmHistory {
        &self.arms[arm].history
    }

    fn check_dim(&self, x: &Context) -> Result<(), PolicyError> {
        if x.dim() != self.dim {
            return Err(OracleError::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            }
            .into());
        }
        Ok(())
    }

    /// Contextual (unwrapped) score for one arm under the policy's rule.
    fn contextual_score(kind: &PolicyKind, slot: &mut ArmSlot, x: &Context) -> f64 {
        match kind {
            PolicyKind::BootstrappedUcb { percentile: p, .. }
            | PolicyKind::OnlineBootstrappedUcb { percentile: p, .. } => {
                let preds: Vec<f64> = slot
                    .models
                    .iter()
                    .map(|m| m.predict_proba(x).expect("dimension checked"))
                    .collect();
                percentile(&preds, *p)
            }
            PolicyKind::BootstrappedTs { resamples } | PolicyKind::OnlineBootstrappedTs { resamples } => {
                let s = slot.score_rng.random_range(0..*resamples);
                slot.models[s].predict_proba(x).expect("dimension checked")
            }
            _ => slot.models[0].predict_proba(x).expect("dimension checked"),
        }
    }

    /// Cold-start-wrapped score for one arm.
    fn wrapped_score(
        kind: &PolicyKind,
        cold_start: &ColdStart,
        slot: &mut ArmSlot,
        x: &Context,
    ) -> f64 {
        match cold_start {
            ColdStart::None => Self::contextual_score(kind, slot, x),
            ColdStart::MabFirst(cfg) => {
                if cfg.gated(&slot.history) {
                    coldstart::beta_draw(
                        cfg.a() + slot.history.n_pos() as f64,
                        cfg.b() + slot.history.n_neg() as f64,
                        &mut slot.score_rng,
                    )
                } else {
                    Self::contextual_score(kind, slot, x)
                }
            }
            ColdStart::Smoothing(cfg) => {
                let r_hat = coldstart::one_class_estimate(&slot.history)
                    .unwrap_or_else(|| Self::contextual_score(kind, slot, x));
                coldstart::smooth(r_hat, slot.history.len(), cfg)
            }
        }
    }

    fn wrapped_scores(&mut self, x: &Context) -> Vec<f64> {
        let kind = self.kind.clone();
        let cold = self.cold_start;
        self.arms
            .iter_mut()
            .map(|slot| Self::wrapped_score(&kind, &cold, slot, x))
            .collect()
    }

    /// Raw per-arm oracle scores, bypassing any cold-start wrapper.
    fn raw_scores(&mut self, x: &Context) -> Vec<f64> {
        let kind = self.kind.clone();
        self.arms
            .iter_mut()
            .map(|slot| Self::contextual_score(&kind, slot, x))
            .collect()
    }

    fn active_scores(&self, x: &Context) -> Vec<f64> {
        let criterion = match &self.kind {
            PolicyKind::ActiveExplorer { criterion, .. }
            | PolicyKind::ActiveAdaptiveGreedy { criterion, .. } => *criterion,
            _ => ActiveCriterion::Weighted,
        };
        self.arms
            .iter()
            .map(|slot| {
                active_score(&slot.models[0], x, criterion).expect("dimension checked")
            })
            .collect()
    }

    fn random_arm(&mut self) -> usize {
        self.select_rng.random_range(0..self.n_arms)
    }

    /// Choose an arm for this round's context.
    pub fn select(&mut self, x: &Context) -> Result<Decision, PolicyError> {
        self.check_dim(x)?;
        let decision = match self.kind.clone() {
            PolicyKind::UniformRandom => Decision {
                arm: self.random_arm(),
                scores: None,
                branch: Branch::Random,
            },
            PolicyKind::FixedArm { arm } => Decision {
                arm,
                scores: None,
                branch: Branch::Fixed,
            },
            PolicyKind::BestArmMab => {
                let scores: Vec<f64> = self
                    .arms
                    .iter_mut()
                    .map(|slot| {
                        coldstart::beta_draw(
                            1.0 + slot.history.n_pos() as f64,
                            1.0 + slot.history.n_neg() as f64,
                            &mut slot.score_rng,
                        )
                    })
                    .collect();
                let arm = argmax_tiebreak(&scores, &mut self.select_rng);
                Decision {
                    arm,
                    scores: Some(scores),
                    branch: Branch::Greedy,
                }
            }
            PolicyKind::EpsilonGreedy { decay, .. } => {
                let explore = self.select_rng.random::<f64>() < self.epsilon;
                let d = if explore {
                    Decision {
                        arm: self.random_arm(),
                        scores: None,
                        branch: Branch::Random,
                    }
                } else {
                    let scores = self.wrapped_scores(x);
                    let arm = argmax_tiebreak(&scores, &mut self.select_rng);
                    Decision {
                        arm,
                        scores: Some(scores),
                        branch: Branch::Greedy,
                    }
                };
                self.epsilon *= decay;
                d
            }
            PolicyKind::ExploreThenExploit { breakpoint } => {
                if self.round < breakpoint {
                    Decision {
                        arm: self.random_arm(),
                        scores: None,
                        branch: Branch::Random,
                    }
                } else {
                    // Exploit phase scores raw oracles; no cold-start wrapper.
                    let scores = self.raw_scores(x);
                    let arm = argmax_tiebreak(&scores, &mut self.select_rng);
                    Decision {
                        arm,
                        scores: Some(scores),
                        branch: Branch::Greedy,
                    }
                }
            }
            PolicyKind::SoftmaxExplorer { inflation, .. } => {
                let scores = self.wrapped_scores(x);
                const EPS: f64 = 1e-12;
                let logits: Vec<f64> = scores
                    .iter()
                    .map(|s| {
                        let s = s.clamp(EPS, 1.0 - EPS);
                        self.multiplier * (s / (1.0 - s)).ln()
                    })
                    .collect();
                let arm = softmax_sample(&logits, &mut self.select_rng);
                self.multiplier *= inflation;
                Decision {
                    arm,
                    scores: Some(scores),
                    branch: Branch::Sampled,
                }
            }
            PolicyKind::BootstrappedUcb { .. }
            | PolicyKind::OnlineBootstrappedUcb { .. }
            | PolicyKind::BootstrappedTs { .. }
            | PolicyKind::OnlineBootstrappedTs { .. } => {
                let scores = self.wrapped_scores(x);
                let arm = argmax_tiebreak(&scores, &mut self.select_rng);
                Decision {
                    arm,
                    scores: Some(scores),
                    branch: Branch::Greedy,
                }
            }
            PolicyKind::AdaptiveGreedy { decay, .. } => {
                let scores = self.wrapped_scores(x);
                let best = max_of(&scores);
                let d = if best > self.threshold {
                    let arm = argmax_tiebreak(&scores, &mut self.select_rng);
                    Decision {
                        arm,
                        scores: Some(scores),
                        branch: Branch::Greedy,
                    }
                } else {
                    Decision {
                        arm: self.random_arm(),
                        scores: Some(scores),
                        branch: Branch::Random,
                    }
                };
                self.threshold *= decay;
                d
            }
            PolicyKind::AdaptiveGreedyWindow {
                window,
                decay,
                moving,
                ..
            } => {
                let scores = self.wrapped_scores(x);
                let best = max_of(&scores);
                let d = if best > self.threshold {
                    let arm = argmax_tiebreak(&scores, &mut self.select_rng);
                    Decision {
                        arm,
                        scores: Some(scores),
                        branch: Branch::Greedy,
                    }
                } else {
                    Decision {
                        arm: self.random_arm(),
                        scores: Some(scores),
                        branch: Branch::Random,
                    }
                };
                self.push_window(best, window, decay, moving);
                d
            }
            PolicyKind::ActiveExplorer { explore_prob, .. } => {
                if self.select_rng.random::<f64>() < explore_prob {
                    let scores = self.active_scores(x);
                    let arm = argmax_tiebreak(&scores, &mut self.select_rng);
                    Decision {
                        arm,
                        scores: Some(scores),
                        branch: Branch::Active,
                    }
                } else {
                    let scores = self.wrapped_scores(x);
                    let arm = argmax_tiebreak(&scores, &mut self.select_rng);
                    Decision {
                        arm,
                        scores: Some(scores),
                        branch: Branch::Greedy,
                    }
                }
            }
            PolicyKind::ActiveAdaptiveGreedy {
                window,
                decay,
                moving,
                ..
            } => {
                let scores = self.wrapped_scores(x);
                let best = max_of(&scores);
                let d = if best > self.threshold {
                    let arm = argmax_tiebreak(&scores, &mut self.select_rng);
                    Decision {
                        arm,
                        scores: Some(scores),
                        branch: Branch::Greedy,
                    }
                } else {
                    let active = self.active_scores(x);
                    let arm = argmax_tiebreak(&active, &mut self.select_rng);
                    Decision {
                        arm,
                        scores: Some(active),
                        branch: Branch::Active,
                    }
                };
                self.push_window(best, window, decay, moving);
                d
            }
        };
        Ok(decision)
    }

    /// Record the round's best wrapped score and refresh the threshold from
    /// the window once enough rounds have accumulated.
    fn push_window(&mut self, best: f64, window: usize, decay: f64, moving: bool) {
        self.window.push_back(best);
        if moving {
            if self.window.len() > window {
                self.window.pop_front();
            }
            if self.window.len() == window {
                let vals: Vec<f64> = self.window.iter().copied().collect();
                self.threshold = percentile(&vals, self.window_percentile);
                self.window_percentile *= decay;
            }
        } else if self.window.len() == window {
            let vals: Vec<f64> = self.window.iter().copied().collect();
            self.threshold = percentile(&vals, self.window_percentile);
            self.window_percentile *= decay;
            self.window.clear();
        }
    }

    /// Record the observed reward for the chosen arm and bring oracles up to
    /// date. Must be called exactly once per select.
    pub fn update(&mut self, x: Arc<Context>, arm: usize, reward: u8) -> Result<(), PolicyError> {
        self.check_dim(&x)?;
        if arm >= self.n_arms {
            return Err(OracleError::ArmOutOfRange {
                arm,
                n_arms: self.n_arms,
            }
            .into());
        }
        self.arms[arm].history.push(x.clone(), reward, 1.0);

        let n_models = self.kind.n_models();
        if n_models > 0 {
            if self.kind.is_online_bootstrap() {
                // One Gamma(1,1) weight draw and one stochastic pass per resample.
                let slot = &mut self.arms[arm];
                let row = HistoryRow {
                    x: x.clone(),
                    reward,
                    weight: 1.0,
                };
                for s in 0..n_models {
                    let w = resampling::draw_weight(
                        WeightScheme::Gamma11Weights,
                        &mut slot.weight_rng,
                    )?;
                    let mut weighted = row.clone();
                    weighted.weight = w;
                    slot.models[s].online_update(std::slice::from_ref(&weighted))?;
                }
            } else {
                match self.oracle_mode {
                    OracleMode::MiniBatch if !self.kind.is_full_bootstrap() => {
                        let slot = &mut self.arms[arm];
                        let row = HistoryRow {
                            x: x.clone(),
                            reward,
                            weight: 1.0,
                        };
                        slot.models[0].online_update(std::slice::from_ref(&row))?;
                    }
                    _ => {
                        self.dirty[arm] = true;
                        let refit_every = match self.oracle_mode {
                            OracleMode::FullRefit { refit_every } => refit_every,
                            // Full-bootstrap kinds batch refits even in
                            // mini-batch oracle mode.
                            OracleMode::MiniBatch => 50,
                        };
                        if (self.round + 1) % refit_every == 0 {
                            self.refit_dirty_arms()?;
                        }
                    }
                }
            }
        }
        self.round += 1;
        Ok(())
    }

    fn refit_dirty_arms(&mut self) -> Result<(), PolicyError> {
        for a in 0..self.n_arms {
            if !self.dirty[a] {
                continue;
            }
            self.dirty[a] = false;
            if !self.arms[a].history.has_both_classes() {
                continue; // stays unfitted until both classes are present
            }
            let refit_count = self.arms[a].refit_count;
            self.arms[a].refit_count += 1;
            if self.kind.is_full_bootstrap() {
                let stream = self
                    .base_rng
                    .derive_tagged(&[TAG_REFIT, a as u64, refit_count]);
                let slot = &mut self.arms[a];
                slot.models = resampling::refit_resamples(
                    &slot.history,
                    slot.models.len(),
                    self.l2_lambda,
                    &stream,
                    Some(&slot.models),
                )?;
            } else {
                let slot = &mut self.arms[a];
                slot.models[0] =
                    oracle::fit_full(&slot.history, self.l2_lambda, Some(&slot.models[0]))?;
            }
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn set_arm_models(&mut self, arm: usize, models: Vec<OracleModel>) {
        self.arms[arm].models = models;
    }

    #[cfg(test)]
    pub(crate) fn arm_models(&self, arm: usize) -> &[OracleModel] {
        &self.arms[arm].models
    }

    #[cfg(test)]
    pub(crate) fn arm_weight_rng(&self, arm: usize) -> RngStream {
        self.arms[arm].weight_rng.clone()
    }
}

fn max_of(scores: &[f64]) -> f64 {
    scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Index of the maximum score; exact ties are broken uniformly at random.
pub(crate) fn argmax_tiebreak(scores: &[f64], rng: &mut RngStream) -> usize {
    let best = max_of(scores);
    let ties: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == best)
        .map(|(i, _)| i)
        .collect();
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..ties.len())]
    }
}

/// Sample an index proportionally to `exp(logit)`, max-subtracted for
/// stability.
fn softmax_sample(logits: &[f64], rng: &mut RngStream) -> usize {
    let max = max_of(logits);
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}
