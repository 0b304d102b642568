//! Cold-start guards for per-arm scorers.
//!
//! Classification oracles cannot be fit while an arm's history holds only one
//! reward class, which is the normal state of affairs early on when non-zero
//! rewards are rare. Two guards are provided:
//!
//! - a smoothing estimator that shrinks the score toward the prior mean
//!   `a / b`, combined with the rule that a one-class history always predicts
//!   its only observed label;
//! - a gate that plays a Beta-prior multi-armed bandit for an arm until it
//!   has a minimum number of observations of each class, and only then hands
//!   scoring over to the contextual policy.

use rand_distr::{Beta, Distribution};
use thiserror::Error;

use crate::oracle::ArmHistory;
use crate::rng::RngStream;

#[derive(Debug, Error, PartialEq)]
pub enum ColdStartError {
    #[error("smoothing constants must satisfy 0 < a < b (got a={a}, b={b})")]
    InvalidSmoothing { a: f64, b: f64 },
    #[error("gate parameters must be positive with threshold >= 1 (got a={a}, b={b}, m={m})")]
    InvalidGate { a: f64, b: f64, m: usize },
}

/// Constants for the smoothing estimator; prior mean is `a / b < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingConfig {
    a: f64,
    b: f64,
}

impl SmoothingConfig {
    pub fn new(a: f64, b: f64) -> Result<Self, ColdStartError> {
        if !(a > 0.0 && b > 0.0 && a < b) {
            return Err(ColdStartError::InvalidSmoothing { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Beta prior and per-class observation threshold for the bandit-first gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MabFirstConfig {
    a: f64,
    b: f64,
    m: usize,
}

impl MabFirstConfig {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self, ColdStartError> {
        if !(a > 0.0 && b > 0.0) || m < 1 {
            return Err(ColdStartError::InvalidGate { a, b, m });
        }
        Ok(Self { a, b, m })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn threshold(&self) -> usize {
        self.m
    }

    /// True while the arm should still be scored by the Beta bandit.
    pub fn gated(&self, history: &ArmHistory) -> bool {
        history.n_pos() < self.m || history.n_neg() < self.m
    }
}

/// `(n * r_hat + a) / (n + b)`.
///
/// For one-class arms the caller passes `r_hat` equal to the single observed
/// label (see [`one_class_estimate`]).
pub fn smooth(r_hat: f64, n: usize, cfg: &SmoothingConfig) -> f64 {
    (n as f64 * r_hat + cfg.a) / (n as f64 + cfg.b)
}

/// The smoothing wrapper's raw estimate for a one-class history: the single
/// observed label. `None` when the history is empty or has both classes.
pub fn one_class_estimate(history: &ArmHistory) -> Option<f64> {
    if history.is_empty() || history.has_both_classes() {
        None
    } else if history.n_pos() > 0 {
        Some(1.0)
    } else {
        Some(0.0)
    }
}

/// Score an arm through the bandit-first gate: a `Beta(a + n_pos, b + n_neg)`
/// draw while either class count is below the threshold, the inner contextual
/// scorer afterward.
pub fn mab_first_score<F>(
    history: &ArmHistory,
    cfg: &MabFirstConfig,
    rng: &mut RngStream,
    inner: F,
) -> f64
where
    F: FnOnce() -> f64,
{
    if cfg.gated(history) {
        beta_draw(
            cfg.a + history.n_pos() as f64,
            cfg.b + history.n_neg() as f64,
            rng,
        )
    } else {
        inner()
    }
}

/// One draw from `Beta(alpha, beta)`.
pub fn beta_draw(alpha: f64, beta: f64, rng: &mut RngStream) -> f64 {
    Beta::new(alpha, beta)
        .expect("valid Beta parameters")
        .sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::Context;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn smoothing_formula_anchors() {
        let cfg = SmoothingConfig::new(3.0, 7.0).unwrap();
        assert!((smooth(0.9, 0, &cfg) - 3.0 / 7.0).abs() < 1e-15);
        let cfg = SmoothingConfig::new(1.0, 2.0).unwrap();
        assert!((smooth(0.2, 10, &cfg) - 0.25).abs() < 1e-15);
        let cfg = SmoothingConfig::new(3.0, 7.0).unwrap();
        assert!((smooth(0.9, 1_000_000, &cfg) - 0.9).abs() < 1e-5);
    }

    #[test]
    fn smoothing_rejects_bad_constants() {
        assert!(SmoothingConfig::new(1.0, 1.0).is_err());
        assert!(SmoothingConfig::new(2.0, 1.0).is_err());
        assert!(SmoothingConfig::new(0.0, 1.0).is_err());
    }

    fn history_with(n_pos: usize, n_neg: usize) -> ArmHistory {
        let mut h = ArmHistory::new();
        let x = Arc::new(Context::dense(&[1.0]));
        for _ in 0..n_pos {
            h.push(x.clone(), 1, 1.0);
        }
        for _ in 0..n_neg {
            h.push(x.clone(), 0, 1.0);
        }
        h
    }

    #[test]
    fn gate_branches_on_class_counts_only() {
        let cfg = MabFirstConfig::new(1.0, 1.0, 2).unwrap();
        let mut rng = RngStream::new(1, 0);
        let h = history_with(0, 5);
        let v = mab_first_score(&h, &cfg, &mut rng, || panic!("inner must not run"));
        assert!(v > 0.0 && v < 1.0);

        let h = history_with(3, 3);
        let v = mab_first_score(&h, &cfg, &mut rng, || 0.7);
        assert_eq!(v, 0.7);
    }

    #[test]
    fn beta_branch_mean_matches_posterior() {
        // Heavily one-sided posterior: Beta(10001, 1).
        let cfg = MabFirstConfig::new(1.0, 1.0, 100_000).unwrap();
        let h = history_with(10_000, 0);
        let mut rng = RngStream::new(2, 0);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| mab_first_score(&h, &cfg, &mut rng, || unreachable!()))
            .sum::<f64>()
            / n as f64;
        let expect = 10_001.0 / 10_002.0;
        assert!((mean - expect).abs() < 0.001, "mean {}", mean);
    }

    #[test]
    fn beta_draws_reproducible_under_seed() {
        let mut a = RngStream::new(3, 9);
        let mut b = RngStream::new(3, 9);
        for _ in 0..50 {
            assert_eq!(beta_draw(2.5, 4.0, &mut a), beta_draw(2.5, 4.0, &mut b));
        }
    }

    #[test]
    fn one_class_estimate_rules() {
        assert_eq!(one_class_estimate(&history_with(0, 0)), None);
        assert_eq!(one_class_estimate(&history_with(3, 0)), Some(1.0));
        assert_eq!(one_class_estimate(&history_with(0, 4)), Some(0.0));
        assert_eq!(one_class_estimate(&history_with(2, 2)), None);
    }

    #[test]
    fn gate_switches_once_histories_are_append_only() {
        let cfg = MabFirstConfig::new(1.0, 1.0, 2).unwrap();
        let mut h = ArmHistory::new();
        let x = Arc::new(Context::dense(&[1.0]));
        let mut switched = false;
        for i in 0..20 {
            h.push(x.clone(), u8::from(i % 2 == 0), 1.0);
            let gated = cfg.gated(&h);
            if switched {
                assert!(!gated, "gate reopened after switching");
            }
            if !gated {
                switched = true;
            }
        }
        assert!(switched);
    }

    proptest! {
        #[test]
        fn smooth_is_strictly_increasing_and_interior(
            r1 in 0.0f64..1.0,
            r2 in 0.0f64..1.0,
            n in 0usize..10_000,
            a in 0.01f64..5.0,
            extra in 0.01f64..5.0,
        ) {
            let cfg = SmoothingConfig::new(a, a + extra).unwrap();
            let s1 = smooth(r1, n, &cfg);
            let s2 = smooth(r2, n, &cfg);
            prop_assert!(s1 > 0.0 && s1 < 1.0);
            if n > 0 && r1 < r2 {
                prop_assert!(s1 < s2);
            }
        }
    }
}
