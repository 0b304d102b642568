//! Small numeric helpers shared across policies and the coverage study.

/// Percentile with linear interpolation between closest ranks.
///
/// For a sorted sample `v` of length `n`, percentile `p` is evaluated at rank
/// `p / 100 * (n - 1)` (0-based), interpolating linearly between the two
/// surrounding order statistics. `p` is clamped to `[0, 100]`.
///
/// Panics on an empty slice.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in percentile input"));
    percentile_of_sorted(&sorted, p)
}

/// As [`percentile`] but assumes `sorted` is already ascending.
pub fn percentile_of_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty sample");
    let p = p.clamp(0.0, 100.0);
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let frac = rank - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Sample mean.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator; 0 for fewer than 2 values).
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(z)) without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        (1.0 + z.exp()).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn percentile_interpolates_between_ranks() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64 * 0.05).collect();
        assert!((percentile(&v, 80.0) - 0.41).abs() < 1e-12);
        let w: Vec<f64> = (1..=10).map(|i| i as f64 * 0.1).collect();
        assert!((percentile(&w, 30.0) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn percentile_boundaries() {
        let v = [0.3, 0.1, 0.2];
        assert_eq!(percentile(&v, 0.0), 0.1);
        assert_eq!(percentile(&v, 100.0), 0.3);
        assert_eq!(percentile(&[0.3; 10], 55.0), 0.3);
    }

    #[test]
    fn percentile_against_nearest_rank_average() {
        // Independent route: evaluate by explicit index arithmetic on a
        // random-ish sample and compare.
        let v: Vec<f64> = (0..7).map(|i| ((i * 37 + 11) % 13) as f64).collect();
        let mut s = v.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for p in [0.0, 12.5, 50.0, 66.0, 99.0, 100.0] {
            let rank: f64 = p / 100.0 * 6.0;
            let lo = rank.floor() as usize;
            let hi = rank.ceil() as usize;
            let expect = s[lo] + (rank - lo as f64) * (s[hi] - s[lo]);
            assert!((percentile(&v, p) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn sigmoid_anchor_points() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!((sigmoid(-(3f64.ln())) - 0.25).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn percentile_monotone_in_p(
            v in proptest::collection::vec(-1e3f64..1e3, 1..40),
            p1 in 0.0f64..100.0,
            p2 in 0.0f64..100.0,
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            prop_assert!(percentile(&v, lo) <= percentile(&v, hi) + 1e-12);
        }

        #[test]
        fn percentile_within_sample_range(
            v in proptest::collection::vec(-1e3f64..1e3, 1..40),
            p in 0.0f64..100.0,
        ) {
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let q = percentile(&v, p);
            prop_assert!(q >= min - 1e-12 && q <= max + 1e-12);
        }
    }
}
