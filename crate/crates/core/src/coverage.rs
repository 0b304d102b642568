//! Coverage study for resampling-based upper confidence bounds.
//!
//! Synthetic data are drawn from a known linear or logistic model; for each
//! training sample, upper bounds on the test-set expected values are built as
//! a percentile of predictions across resampled/reweighted model fits, and
//! coverage is the fraction of test points whose true expected value falls
//! strictly below the bound.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::context::Context;
use crate::oracle::{self, ArmHistory, OracleError, OracleModel};
use crate::resampling::{self, ResampleError, WeightScheme};
use crate::rng::RngStream;
use crate::stats::{mean, percentile, sample_std, sigmoid};

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("covariance matrix is not positive definite")]
    CovarianceNotPsd,
    #[error("generator spec dimensions are inconsistent")]
    SpecDimMismatch,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Resample(#[from] ResampleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Logistic,
}

#[derive(Clone, Debug)]
pub enum FeatureDist {
    /// Independent normals per coordinate.
    Independent { means: Vec<f64>, sds: Vec<f64> },
    /// Multivariate normal with full covariance.
    Correlated { means: Vec<f64>, cov: Vec<Vec<f64>> },
}

#[derive(Clone, Debug)]
pub struct GeneratorSpec {
    pub kind: ModelKind,
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub features: FeatureDist,
    pub noise_sd: f64,
}

impl GeneratorSpec {
    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    fn check(&self) -> Result<(), CoverageError> {
        let d = self.dim();
        let ok = match &self.features {
            FeatureDist::Independent { means, sds } => means.len() == d && sds.len() == d,
            FeatureDist::Correlated { means, cov } => {
                means.len() == d && cov.len() == d && cov.iter().all(|r| r.len() == d)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(CoverageError::SpecDimMismatch)
        }
    }
}

/// Benchmark generator: linear model with standard-normal covariates,
/// `y = 8 + 1.05 x1 - 2.35 x2 + 0.15 x3 + eps`, `eps ~ N(0, 1)`.
pub fn linear_iid_spec() -> GeneratorSpec {
    GeneratorSpec {
        kind: ModelKind::Linear,
        coefficients: vec![1.05, -2.35, 0.15],
        bias: 8.0,
        features: FeatureDist::Independent {
            means: vec![0.0; 3],
            sds: vec![1.0; 3],
        },
        noise_sd: 1.0,
    }
}

/// Benchmark generator: Bernoulli outcomes with a small negative bias inside
/// the link, independent `N(0, 0.5)` covariates, and extra `N(0, 0.5)` noise
/// added to the linear score before the sigmoid.
pub fn logistic_iid_spec() -> GeneratorSpec {
    GeneratorSpec {
        kind: ModelKind::Logistic,
        coefficients: vec![1.05, -2.35, 0.15],
        bias: -2.0,
        features: FeatureDist::Independent {
            means: vec![0.0; 3],
            sds: vec![0.5; 3],
        },
        noise_sd: 0.5,
    }
}

/// As [`logistic_iid_spec`] but with strongly correlated covariates.
pub fn logistic_correlated_spec() -> GeneratorSpec {
    GeneratorSpec {
        kind: ModelKind::Logistic,
        coefficients: vec![1.05, -2.35, 0.15],
        bias: -2.0,
        features: FeatureDist::Correlated {
            means: vec![0.0; 3],
            cov: vec![
                vec![3.17, -1.08, -2.19],
                vec![-1.08, 2.23, 1.10],
                vec![-2.19, 1.10, 1.63],
            ],
        },
        noise_sd: 0.5,
    }
}

/// The 16-point geometric sample-size grid from 10 to 10000.
pub const SIZE_GRID: [usize; 16] = [
    10, 15, 25, 39, 63, 100, 158, 251, 398, 630, 1000, 1584, 2511, 3981, 6309, 10000,
];

pub const DEFAULT_N_SAMPLES: usize = 100;
pub const DEFAULT_N_RESAMPLES: usize = 10;
pub const DEFAULT_PERCENTILE: f64 = 80.0;
pub const DEFAULT_N_TEST: usize = 1000;

struct FeatureSampler {
    means: Vec<f64>,
    /// Per-coordinate sds (independent) or a Cholesky factor (correlated).
    scale: Scale,
}

enum Scale {
    Diagonal(Vec<f64>),
    Factor(DMatrix<f64>),
}

impl FeatureSampler {
    fn build(dist: &FeatureDist) -> Result<Self, CoverageError> {
        match dist {
            FeatureDist::Independent { means, sds } => Ok(Self {
                means: means.clone(),
                scale: Scale::Diagonal(sds.clone()),
            }),
            FeatureDist::Correlated { means, cov } => {
                let d = means.len();
                let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
                let chol = Cholesky::new(m).ok_or(CoverageError::CovarianceNotPsd)?;
                Ok(Self {
                    means: means.clone(),
                    scale: Scale::Factor(chol.l()),
                })
            }
        }
    }

    fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        let d = self.means.len();
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        match &self.scale {
            Scale::Diagonal(sds) => (0..d).map(|j| self.means[j] + sds[j] * z[j]).collect(),
            Scale::Factor(l) => {
                let v = l * DVector::from_vec(z);
                (0..d).map(|j| self.means[j] + v[j]).collect()
            }
        }
    }
}

fn linear_score(spec: &GeneratorSpec, x: &[f64]) -> f64 {
    spec.bias
        + spec
            .coefficients
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
}

/// Noisy training sample: linear targets get additive noise, logistic
/// targets are Bernoulli draws with the noise added inside the link.
pub fn gen_sample(
    spec: &GeneratorSpec,
    n: usize,
    rng: &mut RngStream,
) -> Result<(Vec<Vec<f64>>, Vec<f64>), CoverageError> {
    spec.check()?;
    let sampler = FeatureSampler::build(&spec.features)?;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = sampler.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        let eps = spec.noise_sd * z;
        let s = linear_score(spec, &x) + eps;
        let y = match spec.kind {
            ModelKind::Linear => s,
            ModelKind::Logistic => {
                let p = sigmoid(s);
                f64::from(rand::Rng::random::<f64>(rng) < p)
            }
        };
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}

/// Noiseless test set: features plus the true expected values.
pub fn gen_test_set(
    spec: &GeneratorSpec,
    n_test: usize,
    rng: &mut RngStream,
) -> Result<(Vec<Vec<f64>>, Vec<f64>), CoverageError> {
    spec.check()?;
    let sampler = FeatureSampler::build(&spec.features)?;
    let mut xs = Vec::with_capacity(n_test);
    let mut es = Vec::with_capacity(n_test);
    for _ in 0..n_test {
        let x = sampler.sample(rng);
        let s = linear_score(spec, &x);
        es.push(match spec.kind {
            ModelKind::Linear => s,
            ModelKind::Logistic => sigmoid(s),
        });
        xs.push(x);
    }
    Ok((xs, es))
}

enum FittedModel {
    /// `theta` holds the feature coefficients followed by the intercept.
    Linear(Vec<f64>),
    Logistic(OracleModel),
}

impl FittedModel {
    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            FittedModel::Linear(theta) => {
                let d = theta.len() - 1;
                theta[d] + theta[..d].iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
            }
            FittedModel::Logistic(m) => m
                .predict_proba(&Context::dense(x))
                .expect("matching dimensions"),
        }
    }
}

const LOGISTIC_LAMBDA: f64 = 1e-6;

/// Weighted least squares with intercept via the normal equations; a tiny
/// ridge keeps degenerate resamples solvable.
fn fit_linear(xs: &[Vec<f64>], ys: &[f64], weights: &[f64]) -> FittedModel {
    let d = xs[0].len();
    let p = d + 1;
    let mut ata = DMatrix::<f64>::zeros(p, p);
    let mut atb = DVector::<f64>::zeros(p);
    let mut z = vec![0.0; p];
    for ((x, &y), &w) in xs.iter().zip(ys).zip(weights) {
        if w == 0.0 {
            continue;
        }
        z[..d].copy_from_slice(x);
        z[d] = 1.0;
        for i in 0..p {
            for j in 0..p {
                ata[(i, j)] += w * z[i] * z[j];
            }
            atb[i] += w * z[i] * y;
        }
    }
    for i in 0..p {
        ata[(i, i)] += 1e-8;
    }
    let theta = ata
        .clone()
        .cholesky()
        .map(|c| c.solve(&atb))
        .unwrap_or_else(|| ata.lu().solve(&atb).expect("ridge makes system solvable"));
    FittedModel::Linear(theta.iter().copied().collect())
}

fn weighted_history(xs: &[Vec<f64>], ys: &[f64], weights: &[f64]) -> ArmHistory {
    let mut h = ArmHistory::new();
    for ((x, &y), &w) in xs.iter().zip(ys).zip(weights) {
        if w > 0.0 {
            h.push(std::sync::Arc::new(Context::dense(x)), (y != 0.0) as u8, w);
        }
    }
    h
}

fn fit_logistic(xs: &[Vec<f64>], ys: &[f64], weights: &[f64]) -> Result<FittedModel, CoverageError> {
    let h = weighted_history(xs, ys, weights);
    let h = if h.has_both_classes() {
        h
    } else {
        // Zero-count reweighting (or a degenerate resample) can leave only
        // one class; fall back to the full unweighted sample.
        weighted_history(xs, ys, &vec![1.0; xs.len()])
    };
    Ok(FittedModel::Logistic(oracle::fit_full(
        &h,
        LOGISTIC_LAMBDA,
        None,
    )?))
}

const ONE_CLASS_REDRAWS: usize = 100;

/// Per-test-point percentile bound over `n_resamples` refits under `scheme`.
pub fn estimate_bounds(
    kind: ModelKind,
    xs: &[Vec<f64>],
    ys: &[f64],
    scheme: WeightScheme,
    n_resamples: usize,
    pctile: f64,
    test_xs: &[Vec<f64>],
    rng: &RngStream,
) -> Result<Vec<f64>, CoverageError> {
    let n = xs.len();
    if kind == ModelKind::Logistic && !ys.iter().any(|&y| y != 0.0) {
        return Err(OracleError::OneClassData.into());
    }
    if kind == ModelKind::Logistic && ys.iter().all(|&y| y != 0.0) {
        return Err(OracleError::OneClassData.into());
    }
    let mut preds: Vec<Vec<f64>> = vec![Vec::with_capacity(n_resamples); test_xs.len()];
    for s in 0..n_resamples {
        let mut stream = rng.derive(s as u64);
        let model = match scheme {
            WeightScheme::FullBootstrap => {
                let mut chosen: Option<(Vec<Vec<f64>>, Vec<f64>)> = None;
                for _ in 0..=ONE_CLASS_REDRAWS {
                    let idx = resampling::draw_resample_indices(n, &mut stream)?;
                    let rx: Vec<Vec<f64>> = idx.iter().map(|&i| xs[i].clone()).collect();
                    let ry: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
                    let two_class = kind == ModelKind::Linear
                        || (ry.iter().any(|&y| y != 0.0) && ry.iter().any(|&y| y == 0.0));
                    if two_class {
                        chosen = Some((rx, ry));
                        break;
                    }
                }
                let (rx, ry) = match &chosen {
                    Some((rx, ry)) => (rx.as_slice(), ry.as_slice()),
                    // After exhausting redraws, fall back to the full sample.
                    None => (xs, ys),
                };
                let w = vec![1.0; rx.len()];
                match kind {
                    ModelKind::Linear => fit_linear(rx, ry, &w),
                    ModelKind::Logistic => fit_logistic(rx, ry, &w)?,
                }
            }
            _ => {
                let w: Vec<f64> = (0..n)
                    .map(|_| resampling::draw_weight(scheme, &mut stream))
                    .collect::<Result<_, _>>()?;
                match kind {
                    ModelKind::Linear => fit_linear(xs, ys, &w),
                    ModelKind::Logistic => fit_logistic(xs, ys, &w)?,
                }
            }
        };
        for (i, tx) in test_xs.iter().enumerate() {
            preds[i].push(model.predict(tx));
        }
    }
    Ok(preds.iter().map(|p| percentile(p, pctile)).collect())
}

/// Fraction of test points whose true expected value is strictly below the
/// bound.
pub fn coverage_proportion(true_vals: &[f64], bounds: &[f64]) -> f64 {
    debug_assert_eq!(true_vals.len(), bounds.len());
    let hits = true_vals
        .iter()
        .zip(bounds)
        .filter(|(t, b)| t < b)
        .count();
    hits as f64 / true_vals.len() as f64
}

#[derive(Clone, Debug)]
pub struct CoverageCell {
    pub size: usize,
    pub scheme: WeightScheme,
    /// Mean coverage across samples, in percent.
    pub mean_pct: f64,
    /// Sample standard deviation across samples, in percent.
    pub std_pct: f64,
}

#[derive(Clone, Debug, Default)]
pub struct CoverageResult {
    pub cells: Vec<CoverageCell>,
}

// Stream tags for the study's derivations.
const TAG_TRAIN: u64 = 1;
const TAG_TEST: u64 = 2;
const TAG_SCHEME: u64 = 3;

/// The full study: for each (sample size, scheme), `n_samples` independent
/// training samples, one bound set each, coverage mean and std across
/// samples. Training samples share the RNG stream across schemes so every
/// scheme is judged on the same data.
#[allow(clippy::too_many_arguments)]
pub fn run_coverage(
    spec: &GeneratorSpec,
    schemes: &[WeightScheme],
    sizes: &[usize],
    n_samples: usize,
    n_resamples: usize,
    pctile: f64,
    n_test: usize,
    seed: u64,
) -> Result<CoverageResult, CoverageError> {
    spec.check()?;
    let base = RngStream::new(seed, 0xc0ffee);
    let mut cells = Vec::new();
    for &size in sizes {
        // proportions[scheme_idx][sample_idx]
        let mut proportions: Vec<Vec<f64>> = vec![Vec::with_capacity(n_samples); schemes.len()];
        for sample_idx in 0..n_samples {
            let (xs, ys) = {
                // Redraw until the Bernoulli sample has both classes; at the
                // study's sizes this only triggers for very small n.
                let mut attempt = 0u64;
                loop {
                    let mut train_rng =
                        base.derive_tagged(&[TAG_TRAIN, size as u64, sample_idx as u64, attempt]);
                    let (xs, ys) = gen_sample(spec, size, &mut train_rng)?;
                    let ok = spec.kind == ModelKind::Linear
                        || (ys.iter().any(|&y| y != 0.0) && ys.iter().any(|&y| y == 0.0));
                    if ok {
                        break (xs, ys);
                    }
                    attempt += 1;
                    assert!(attempt < 10_000, "generator cannot produce two classes");
                }
            };
            let mut test_rng = base.derive_tagged(&[TAG_TEST, size as u64, sample_idx as u64]);
            let (test_xs, true_vals) = gen_test_set(spec, n_test, &mut test_rng)?;
            for (si, &scheme) in schemes.iter().enumerate() {
                let stream =
                    base.derive_tagged(&[TAG_SCHEME, size as u64, sample_idx as u64, si as u64]);
                let bounds = estimate_bounds(
                    spec.kind,
                    &xs,
                    &ys,
                    scheme,
                    n_resamples,
                    pctile,
                    &test_xs,
                    &stream,
                )?;
                proportions[si].push(coverage_proportion(&true_vals, &bounds));
            }
        }
        for (si, &scheme) in schemes.iter().enumerate() {
            cells.push(CoverageCell {
                size,
                scheme,
                mean_pct: 100.0 * mean(&proportions[si]),
                std_pct: 100.0 * sample_std(&proportions[si]),
            });
        }
    }
    Ok(CoverageResult { cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_noise_linear() -> GeneratorSpec {
        GeneratorSpec {
            noise_sd: 0.0,
            ..linear_iid_spec()
        }
    }

    #[test]
    fn zero_noise_linear_targets_are_exact() {
        let spec = zero_noise_linear();
        let mut rng = RngStream::new(1, 0);
        let (xs, ys) = gen_sample(&spec, 50, &mut rng).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((y - linear_score(&spec, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn test_set_constant_cases() {
        let spec = GeneratorSpec {
            kind: ModelKind::Linear,
            coefficients: vec![0.0; 3],
            bias: 8.0,
            features: FeatureDist::Independent {
                means: vec![0.0; 3],
                sds: vec![1.0; 3],
            },
            noise_sd: 1.0,
        };
        let (_, es) = gen_test_set(&spec, 20, &mut RngStream::new(2, 0)).unwrap();
        assert!(es.iter().all(|&e| (e - 8.0).abs() < 1e-12));

        let spec = GeneratorSpec {
            kind: ModelKind::Logistic,
            bias: 0.0,
            ..spec
        };
        let (_, es) = gen_test_set(&spec, 20, &mut RngStream::new(3, 0)).unwrap();
        assert!(es.iter().all(|&e| (e - 0.5).abs() < 1e-12));
    }

    #[test]
    fn non_psd_covariance_is_rejected() {
        let spec = GeneratorSpec {
            kind: ModelKind::Linear,
            coefficients: vec![1.0, 1.0],
            bias: 0.0,
            features: FeatureDist::Correlated {
                means: vec![0.0, 0.0],
                cov: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            },
            noise_sd: 0.0,
        };
        assert!(matches!(
            gen_sample(&spec, 5, &mut RngStream::new(4, 0)),
            Err(CoverageError::CovarianceNotPsd)
        ));
    }

    #[test]
    fn correlated_sampler_matches_target_covariance() {
        let spec = logistic_correlated_spec();
        let mut rng = RngStream::new(5, 0);
        let (xs, _) = gen_sample(&spec, 40_000, &mut rng).unwrap();
        let target = match &spec.features {
            FeatureDist::Correlated { cov, .. } => cov.clone(),
            _ => unreachable!(),
        };
        for i in 0..3 {
            for j in 0..3 {
                let mi = xs.iter().map(|x| x[i]).sum::<f64>() / xs.len() as f64;
                let mj = xs.iter().map(|x| x[j]).sum::<f64>() / xs.len() as f64;
                let c = xs
                    .iter()
                    .map(|x| (x[i] - mi) * (x[j] - mj))
                    .sum::<f64>()
                    / xs.len() as f64;
                assert!(
                    (c - target[i][j]).abs() < 0.08,
                    "cov[{i}][{j}] = {c} vs {}",
                    target[i][j]
                );
            }
        }
    }

    #[test]
    fn weighted_ols_recovers_exact_linear_data() {
        let spec = zero_noise_linear();
        let mut rng = RngStream::new(6, 0);
        let (xs, ys) = gen_sample(&spec, 100, &mut rng).unwrap();
        let w = vec![1.0; xs.len()];
        let m = fit_linear(&xs, &ys, &w);
        if let FittedModel::Linear(theta) = &m {
            for (t, c) in theta[..3].iter().zip(&spec.coefficients) {
                assert!((t - c).abs() < 1e-5, "{t} vs {c}");
            }
            assert!((theta[3] - spec.bias).abs() < 1e-5);
        } else {
            panic!("expected linear fit");
        }
    }

    #[test]
    fn weighted_ols_normal_equation_residuals_vanish() {
        // Independent optimality check: at the weighted least-squares
        // optimum, Z' W r = 0 (up to the tiny ridge).
        let spec = linear_iid_spec();
        let mut rng = RngStream::new(7, 0);
        let (xs, ys) = gen_sample(&spec, 200, &mut rng).unwrap();
        let w: Vec<f64> = (0..200)
            .map(|_| 0.5 + rand::Rng::random::<f64>(&mut rng))
            .collect();
        let m = fit_linear(&xs, &ys, &w);
        let theta = match &m {
            FittedModel::Linear(t) => t.clone(),
            _ => unreachable!(),
        };
        let mut moments = vec![0.0; 4];
        for ((x, &y), &wi) in xs.iter().zip(&ys).zip(&w) {
            let r = y - m.predict(x);
            for j in 0..3 {
                moments[j] += wi * r * x[j];
            }
            moments[3] += wi * r;
        }
        for (j, mo) in moments.iter().enumerate() {
            assert!(mo.abs() < 1e-4 + 1e-7 * theta[j].abs(), "moment {j} = {mo}");
        }
    }

    #[test]
    fn constant_models_give_constant_bounds() {
        // Zero coefficients and zero noise: every refit predicts the bias.
        let spec = GeneratorSpec {
            kind: ModelKind::Linear,
            coefficients: vec![0.0; 2],
            bias: 3.5,
            features: FeatureDist::Independent {
                means: vec![0.0; 2],
                sds: vec![1.0; 2],
            },
            noise_sd: 0.0,
        };
        let mut rng = RngStream::new(8, 0);
        let (xs, ys) = gen_sample(&spec, 30, &mut rng).unwrap();
        let (test_xs, _) = gen_test_set(&spec, 10, &mut rng).unwrap();
        for scheme in WeightScheme::ALL {
            let bounds = estimate_bounds(
                ModelKind::Linear,
                &xs,
                &ys,
                scheme,
                10,
                80.0,
                &test_xs,
                &RngStream::new(8, 5),
            )
            .unwrap();
            assert!(bounds.iter().all(|b| (b - 3.5).abs() < 1e-6));
        }
    }

    #[test]
    fn degenerate_bootstrap_equals_single_model() {
        // All rows identical: every resample is the same sample, so the
        // percentile over resamples equals the single model's prediction.
        let xs: Vec<Vec<f64>> = vec![vec![1.0, 2.0]; 5];
        let ys = vec![4.0; 5];
        let test_xs = vec![vec![1.0, 2.0], vec![0.0, 0.0]];
        let bounds = estimate_bounds(
            ModelKind::Linear,
            &xs,
            &ys,
            WeightScheme::FullBootstrap,
            10,
            80.0,
            &test_xs,
            &RngStream::new(9, 0),
        )
        .unwrap();
        let single = fit_linear(&xs, &ys, &vec![1.0; 5]);
        for (b, tx) in bounds.iter().zip(&test_xs) {
            assert!((b - single.predict(tx)).abs() < 1e-9);
        }
    }

    #[test]
    fn one_class_base_sample_is_rejected() {
        let xs = vec![vec![0.0], vec![1.0]];
        for ys in [vec![1.0, 1.0], vec![0.0, 0.0]] {
            assert!(matches!(
                estimate_bounds(
                    ModelKind::Logistic,
                    &xs,
                    &ys,
                    WeightScheme::FullBootstrap,
                    3,
                    80.0,
                    &xs,
                    &RngStream::new(10, 0),
                ),
                Err(CoverageError::Oracle(OracleError::OneClassData))
            ));
        }
    }

    #[test]
    fn raising_percentile_never_lowers_bounds() {
        let spec = logistic_iid_spec();
        let mut rng = RngStream::new(11, 0);
        let (xs, ys) = gen_sample(&spec, 80, &mut rng).unwrap();
        let (test_xs, _) = gen_test_set(&spec, 50, &mut rng).unwrap();
        let stream = RngStream::new(11, 3);
        let lo = estimate_bounds(
            ModelKind::Logistic,
            &xs,
            &ys,
            WeightScheme::Gamma11Weights,
            10,
            50.0,
            &test_xs,
            &stream,
        )
        .unwrap();
        let hi = estimate_bounds(
            ModelKind::Logistic,
            &xs,
            &ys,
            WeightScheme::Gamma11Weights,
            10,
            90.0,
            &test_xs,
            &stream,
        )
        .unwrap();
        for (l, h) in lo.iter().zip(&hi) {
            assert!(l <= h);
        }
    }

    #[test]
    fn infinite_bounds_cover_everything_exactly() {
        let true_vals = vec![0.1, 0.9, 55.0, -3.0];
        let bounds = vec![f64::INFINITY; 4];
        assert_eq!(coverage_proportion(&true_vals, &bounds), 1.0);
        // Strictness: equal bound does not count.
        assert_eq!(coverage_proportion(&[1.0], &[1.0]), 0.0);
    }

    #[test]
    fn coverage_proportion_order_invariant() {
        let t = vec![0.1, 0.5, 0.9];
        let b = vec![0.2, 0.4, 1.0];
        let t2 = vec![0.9, 0.1, 0.5];
        let b2 = vec![1.0, 0.2, 0.4];
        assert_eq!(coverage_proportion(&t, &b), coverage_proportion(&t2, &b2));
    }

    #[test]
    fn small_study_runs_and_is_deterministic() {
        let spec = logistic_iid_spec();
        let run = || {
            run_coverage(
                &spec,
                &[WeightScheme::Gamma11Weights, WeightScheme::PoissonCounts],
                &[25, 63],
                5,
                5,
                80.0,
                50,
                123,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.cells.len(), 4);
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            assert_eq!(ca.mean_pct, cb.mean_pct);
            assert_eq!(ca.std_pct, cb.std_pct);
            assert!((0.0..=100.0).contains(&ca.mean_pct));
            assert!(ca.std_pct >= 0.0);
        }
    }
}
