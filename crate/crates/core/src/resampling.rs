//! Bootstrap resampling and its online approximations.
//!
//! Full bootstrap draws same-size resamples with replacement and refits.
//! The online schemes instead attach a random occurrence count or weight to
//! each observation as it arrives: `Poisson(1)` counts, or strictly positive
//! weights from `Uniform(0,1]`, `Gamma(1,1)` or `Gamma(2,2)` (shape, rate).

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use thiserror::Error;

use crate::oracle::{self, ArmHistory, OracleError, OracleModel};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightScheme {
    FullBootstrap,
    PoissonCounts,
    UniformWeights,
    Gamma11Weights,
    Gamma22Weights,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 5] = [
        WeightScheme::FullBootstrap,
        WeightScheme::PoissonCounts,
        WeightScheme::UniformWeights,
        WeightScheme::Gamma11Weights,
        WeightScheme::Gamma22Weights,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::FullBootstrap => "bootstrap",
            WeightScheme::PoissonCounts => "poisson1",
            WeightScheme::UniformWeights => "uniform01",
            WeightScheme::Gamma11Weights => "gamma11",
            WeightScheme::Gamma22Weights => "gamma22",
        }
    }

    pub fn parse(s: &str) -> Option<WeightScheme> {
        match s {
            "bootstrap" => Some(WeightScheme::FullBootstrap),
            "poisson1" | "poisson" => Some(WeightScheme::PoissonCounts),
            "uniform01" | "uniform" => Some(WeightScheme::UniformWeights),
            "gamma11" => Some(WeightScheme::Gamma11Weights),
            "gamma22" => Some(WeightScheme::Gamma22Weights),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ResampleError {
    #[error("cannot resample from an empty pool")]
    EmptyPool,
    #[error("scheme {0:?} does not draw per-observation weights")]
    SchemeMismatch(WeightScheme),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// `n` indices drawn uniformly on `[0, n)` with replacement.
pub fn draw_resample_indices(n: usize, rng: &mut RngStream) -> Result<Vec<usize>, ResampleError> {
    if n == 0 {
        return Err(ResampleError::EmptyPool);
    }
    Ok((0..n).map(|_| rng.random_range(0..n)).collect())
}

/// One draw from the scheme's weight/count distribution.
pub fn draw_weight(scheme: WeightScheme, rng: &mut RngStream) -> Result<f64, ResampleError> {
    match scheme {
        WeightScheme::FullBootstrap => Err(ResampleError::SchemeMismatch(scheme)),
        WeightScheme::PoissonCounts => {
            let d = Poisson::new(1.0).expect("valid Poisson parameter");
            Ok(d.sample(rng))
        }
        WeightScheme::UniformWeights => {
            // (0, 1]: flip the half-open unit interval to exclude zero.
            Ok(1.0 - rng.random::<f64>())
        }
        WeightScheme::Gamma11Weights => {
            let d = Gamma::new(1.0, 1.0).expect("valid Gamma parameters");
            Ok(d.sample(rng))
        }
        WeightScheme::Gamma22Weights => {
            // shape 2, rate 2 (scale 1/2): mean 1, variance 1/2
            let d = Gamma::new(2.0, 0.5).expect("valid Gamma parameters");
            Ok(d.sample(rng))
        }
    }
}

/// Max redraw attempts before a one-class resample falls back to the full
/// history.
const ONE_CLASS_REDRAWS: usize = 100;

/// Fit `m` models, each to an independent bootstrap resample of `history`.
///
/// A resample that comes out one-class is redrawn up to 100 times, then falls
/// back to the unresampled history. `warm`, when given, seeds each resample's
/// optimizer from the corresponding previous model.
pub fn refit_resamples(
    history: &ArmHistory,
    m: usize,
    l2_lambda: f64,
    rng: &RngStream,
    warm: Option<&[OracleModel]>,
) -> Result<Vec<OracleModel>, ResampleError> {
    if !history.has_both_classes() {
        return Err(OracleError::OneClassData.into());
    }
    let mut models = Vec::with_capacity(m);
    for s in 0..m {
        let mut stream = rng.derive(s as u64);
        let mut resampled = None;
        for _ in 0..=ONE_CLASS_REDRAWS {
            let idx = draw_resample_indices(history.len(), &mut stream)?;
            let candidate = history.subsample(&idx);
            if candidate.has_both_classes() {
                resampled = Some(candidate);
                break;
            }
        }
        let warm_s = warm.and_then(|w| w.get(s));
        let model = match &resampled {
            Some(h) => oracle::fit_full(h, l2_lambda, warm_s)?,
            None => oracle::fit_full(history, l2_lambda, warm_s)?,
        };
        models.push(model);
    }
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::Context;
    use std::sync::Arc;

    #[test]
    fn single_element_pool_yields_zero() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(draw_resample_indices(1, &mut rng).unwrap(), vec![0]);
        assert_eq!(
            draw_resample_indices(0, &mut rng).unwrap_err(),
            ResampleError::EmptyPool
        );
    }

    #[test]
    fn indices_stay_in_range() {
        let mut rng = RngStream::new(2, 0);
        let idx = draw_resample_indices(5, &mut rng).unwrap();
        assert_eq!(idx.len(), 5);
        assert!(idx.iter().all(|&i| i < 5));
    }

    #[test]
    fn index_frequencies_are_uniform() {
        let mut rng = RngStream::new(3, 0);
        let n = 10;
        let draws = 1_000_000;
        let mut counts = vec![0usize; n];
        for _ in 0..draws / n {
            for i in draw_resample_indices(n, &mut rng).unwrap() {
                counts[i] += 1;
            }
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.1).abs() < 0.0011, "freq {}", freq);
        }
    }

    #[test]
    fn weight_scheme_moments() {
        let n = 1_000_000;
        let mut rng = RngStream::new(4, 0);
        let sample = |scheme, rng: &mut RngStream| -> Vec<f64> {
            (0..n).map(|_| draw_weight(scheme, rng).unwrap()).collect()
        };

        let g11 = sample(WeightScheme::Gamma11Weights, &mut rng);
        let mean = g11.iter().sum::<f64>() / n as f64;
        let var = g11.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "gamma11 mean {}", mean);
        assert!((var - 1.0).abs() < 0.02, "gamma11 var {}", var);
        assert!(g11.iter().all(|&w| w > 0.0));

        let g22 = sample(WeightScheme::Gamma22Weights, &mut rng);
        let mean = g22.iter().sum::<f64>() / n as f64;
        let var = g22.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "gamma22 mean {}", mean);
        assert!((var - 0.5).abs() < 0.01, "gamma22 var {}", var);
        assert!(g22.iter().all(|&w| w > 0.0));

        let pois = sample(WeightScheme::PoissonCounts, &mut rng);
        let p0 = pois.iter().filter(|&&v| v == 0.0).count() as f64 / n as f64;
        assert!((p0 - (-1.0f64).exp()).abs() < 0.002, "poisson P(0) {}", p0);
        assert!(pois.iter().all(|&v| v >= 0.0 && v.fract() == 0.0));

        let unif = sample(WeightScheme::UniformWeights, &mut rng);
        assert!(unif.iter().all(|&w| w > 0.0 && w <= 1.0));
    }

    #[test]
    fn full_bootstrap_rejects_weight_draws() {
        let mut rng = RngStream::new(5, 0);
        assert!(matches!(
            draw_weight(WeightScheme::FullBootstrap, &mut rng),
            Err(ResampleError::SchemeMismatch(_))
        ));
    }

    fn two_class_history(n: usize, seed: u64) -> ArmHistory {
        let mut rng = RngStream::new(seed, 0);
        let mut h = ArmHistory::new();
        for i in 0..n {
            let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
            let r = u8::from(i % 3 == 0);
            h.push(Arc::new(Context::dense(&x)), r, 1.0);
        }
        h
    }

    #[test]
    fn returns_requested_resample_count() {
        let h = two_class_history(30, 6);
        let rng = RngStream::new(6, 1);
        let models = refit_resamples(&h, 10, 0.1, &rng, None).unwrap();
        assert_eq!(models.len(), 10);
        assert!(models.iter().all(|m| m.is_fitted()));
    }

    #[test]
    fn one_class_history_errors() {
        let mut h = ArmHistory::new();
        h.push(Arc::new(Context::dense(&[1.0])), 1, 1.0);
        h.push(Arc::new(Context::dense(&[2.0])), 1, 1.0);
        let rng = RngStream::new(7, 0);
        assert!(matches!(
            refit_resamples(&h, 3, 0.1, &rng, None),
            Err(ResampleError::Oracle(OracleError::OneClassData))
        ));
    }

    #[test]
    fn fixed_seed_is_fully_deterministic() {
        let h = two_class_history(50, 8);
        let rng = RngStream::new(8, 2);
        let a = refit_resamples(&h, 5, 0.1, &rng, None).unwrap();
        let b = refit_resamples(&h, 5, 0.1, &rng, None).unwrap();
        for (ma, mb) in a.iter().zip(&b) {
            assert_eq!(ma.weights(), mb.weights());
            assert_eq!(ma.bias(), mb.bias());
        }
    }

    #[test]
    fn tiny_history_resample_can_equal_full_fit() {
        // With 2 rows the resample {0, 1} (in some order) equals the original
        // history; scan resamples for one that picked both rows.
        let mut h = ArmHistory::new();
        h.push(Arc::new(Context::dense(&[1.0])), 1, 1.0);
        h.push(Arc::new(Context::dense(&[-1.0])), 0, 1.0);
        let full = oracle::fit_full(&h, 1.0, None).unwrap();
        let rng = RngStream::new(9, 0);
        let models = refit_resamples(&h, 20, 1.0, &rng, None).unwrap();
        let hit = models.iter().any(|m| {
            m.weights()
                .iter()
                .zip(full.weights())
                .all(|(a, b)| (a - b).abs() < 1e-9)
                && (m.bias() - full.bias()).abs() < 1e-9
        });
        assert!(hit, "no resample coincided with the full history");
    }
}
