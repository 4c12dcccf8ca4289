//! Small deterministic statistics helpers.

/// Pairwise summation; the reduction tree depends only on the length.
pub fn sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    sum(a) + sum(b)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sum(xs) / xs.len() as f64
}

/// Unbiased sample variance, two-pass.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    sum(&sq) / (xs.len() - 1) as f64
}

pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Standard error of the unbiased variance estimate, from the fourth
/// central moment.
pub fn variance_std_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 4 {
        return f64::NAN;
    }
    let m = mean(xs);
    let s2 = variance(xs);
    let m4 = mean(&xs.iter().map(|x| (x - m).powi(4)).collect::<Vec<_>>());
    ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
}

/// Unweighted least squares `y = slope * x + intercept`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Fit {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxy = sum(&x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect::<Vec<_>>());
    let sxx = sum(&x.iter().map(|a| (a - mx) * (a - mx)).collect::<Vec<_>>());
    let slope = sxy / sxx;
    Fit { slope, intercept: my - slope * mx }
}

pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy = sum(&x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect::<Vec<_>>());
    let sxx = sum(&x.iter().map(|a| (a - mx) * (a - mx)).collect::<Vec<_>>());
    let syy = sum(&y.iter().map(|b| (b - my) * (b - my)).collect::<Vec<_>>());
    sxy / (sxx * syy).sqrt()
}

/// Contiguous batches of `0..len`, sizes differing by at most one.
pub fn batches(len: usize, count: usize) -> Vec<std::ops::Range<usize>> {
    let count = count.clamp(1, len.max(1));
    (0..count).map(|b| (b * len / count)..((b + 1) * len / count)).collect()
}

/// Batch-means standard error of a statistic of the samples: the statistic
/// is recomputed on each contiguous batch and `sd(batch values) / sqrt(B)`
/// is returned with the batch values.
pub fn batch_means<T>(samples: &[T], count: usize, stat: impl Fn(&[T]) -> f64) -> (f64, Vec<f64>) {
    let vals: Vec<f64> = batches(samples.len(), count).into_iter().map(|r| stat(&samples[r])).collect();
    let se = if vals.len() < 2 { f64::NAN } else { (variance(&vals) / vals.len() as f64).sqrt() };
    (se, vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line_is_recovered() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.25 * v - 1.0).collect();
        let f = least_squares(&x, &y);
        assert!((f.slope - 0.25).abs() < 1e-12 && (f.intercept + 1.0).abs() < 1e-12);
        assert!((correlation(&x, &y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_moments() {
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        assert_eq!(mean(&xs), 5.0);
        assert!((variance(&xs) - 32.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn batch_ranges_cover() {
        let b = batches(10, 3);
        assert_eq!(b, vec![0..3, 3..6, 6..10]);
        assert_eq!(batches(2, 5).len(), 2);
    }

    proptest! {
        #[test]
        fn pairwise_sum_is_close_to_naive(xs in proptest::collection::vec(-1e6f64..1e6, 0..200)) {
            let naive: f64 = xs.iter().sum();
            prop_assert!((sum(&xs) - naive).abs() <= 1e-6 * (1.0 + xs.iter().map(|x| x.abs()).sum::<f64>()));
        }

        #[test]
        fn variance_is_shift_invariant(xs in proptest::collection::vec(-100f64..100.0, 2..50), c in -1e3f64..1e3) {
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            prop_assert!((variance(&xs) - variance(&shifted)).abs() <= 1e-6 * (1.0 + variance(&xs)));
        }
    }
}
