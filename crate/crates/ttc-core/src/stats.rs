//! Small statistics helpers: means, percentiles, and seeded percentile
//! bootstrap confidence intervals for accuracy comparisons.

use alloc::vec::Vec;

use crate::rng::StreamScope;

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Linearly interpolated percentile of already-sorted data, `q` in [0, 1].
pub fn percentile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let clamped = q.clamp(0.0, 1.0);
    let position = clamped * (sorted.len() - 1) as f64;
    let lo = position as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let fraction = position - lo as f64;
    Some(sorted[lo] * (1.0 - fraction) + sorted[hi] * fraction)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn excludes(&self, x: f64) -> bool {
        !self.contains(x)
    }

    pub fn overlaps(&self, other: &ConfidenceInterval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

fn resample_mean(values: &[f64], scope: &StreamScope, index: u64) -> f64 {
    let mut stream = scope.indexed("resample", index).stream();
    let n = values.len();
    let mut total = 0.0;
    for _ in 0..n {
        total += values[stream.uniform_inclusive(0, (n - 1) as u64) as usize];
    }
    total / n as f64
}

/// Percentile-bootstrap confidence interval for the mean at the given
/// confidence level (e.g. 0.95). Deterministic for a fixed seed.
pub fn bootstrap_mean_ci(
    values: &[f64],
    resamples: u32,
    confidence: f64,
    seed: u64,
) -> Option<ConfidenceInterval> {
    if values.is_empty() || resamples == 0 {
        return None;
    }
    let scope = StreamScope::root(seed).child("bootstrap");
    let mut means: Vec<f64> = (0..u64::from(resamples))
        .map(|b| resample_mean(values, &scope, b))
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let alpha = (1.0 - confidence) / 2.0;
    Some(ConfidenceInterval {
        lo: percentile_sorted(&means, alpha)?,
        hi: percentile_sorted(&means, 1.0 - alpha)?,
    })
}

/// Percentile-bootstrap confidence interval for `mean(a) - mean(b)`, with
/// independent resampling of the two samples. A CI entirely above zero is
/// evidence that `a`'s mean exceeds `b`'s.
pub fn bootstrap_diff_ci(
    a: &[f64],
    b: &[f64],
    resamples: u32,
    confidence: f64,
    seed: u64,
) -> Option<ConfidenceInterval> {
    if a.is_empty() || b.is_empty() || resamples == 0 {
        return None;
    }
    let scope_a = StreamScope::root(seed).child("bootstrap-a");
    let scope_b = StreamScope::root(seed).child("bootstrap-b");
    let mut diffs: Vec<f64> = (0..u64::from(resamples))
        .map(|i| resample_mean(a, &scope_a, i) - resample_mean(b, &scope_b, i))
        .collect();
    diffs.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    let alpha = (1.0 - confidence) / 2.0;
    Some(ConfidenceInterval {
        lo: percentile_sorted(&diffs, alpha)?,
        hi: percentile_sorted(&diffs, 1.0 - alpha)?,
    })
}

/// Convenience for accuracy data: successes as 1.0, failures as 0.0.
pub fn indicator(values: &[bool]) -> Vec<f64> {
    values.iter().map(|&v| f64::from(u8::from(v))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use alloc::vec;

    #[test]
    fn mean_basics() {
        assert_eq!(mean(&[]), None);
        assert_eq!(mean(&[2.0]), Some(2.0));
        assert_eq!(mean(&[1.0, 2.0, 3.0]), Some(2.0));
    }

    #[test]
    fn percentile_interpolates() {
        let sorted = vec![0.0, 1.0, 2.0, 3.0];
        assert_eq!(percentile_sorted(&sorted, 0.0), Some(0.0));
        assert_eq!(percentile_sorted(&sorted, 1.0), Some(3.0));
        assert_eq!(percentile_sorted(&sorted, 0.5), Some(1.5));
        assert_eq!(percentile_sorted(&[], 0.5), None);
    }

    #[test]
    fn constant_data_gives_degenerate_interval() {
        let data = vec![0.7; 50];
        let ci = bootstrap_mean_ci(&data, 500, 0.95, 1).unwrap();
        // Summation order varies by resample, so allow accumulation error.
        assert!((ci.lo - 0.7).abs() < 1e-12);
        assert!((ci.hi - 0.7).abs() < 1e-12);
        assert!(ci.hi - ci.lo < 1e-12);
        assert!(ci.excludes(0.69));
    }

    #[test]
    fn interval_brackets_the_true_mean() {
        let mut rng = seeded_rng(2, &["stats-data"]);
        let data: Vec<f64> = (0..1000)
            .map(|_| f64::from(u8::from(rng.bernoulli(0.5))))
            .collect();
        let ci = bootstrap_mean_ci(&data, 2000, 0.95, 3).unwrap();
        assert!(ci.contains(0.5), "{ci:?}");
        // Width near the normal-approximation 2·1.96·sqrt(p(1-p)/n).
        let width = ci.hi - ci.lo;
        assert!(width > 0.03 && width < 0.1, "width {width}");
    }

    #[test]
    fn separated_samples_exclude_zero_difference() {
        let mut rng = seeded_rng(4, &["stats-sep"]);
        let a: Vec<f64> = (0..500)
            .map(|_| f64::from(u8::from(rng.bernoulli(0.8))))
            .collect();
        let b: Vec<f64> = (0..500)
            .map(|_| f64::from(u8::from(rng.bernoulli(0.5))))
            .collect();
        let ci = bootstrap_diff_ci(&a, &b, 2000, 0.95, 5).unwrap();
        assert!(ci.lo > 0.0, "{ci:?}");
        let same = bootstrap_diff_ci(&a, &a, 2000, 0.95, 5).unwrap();
        assert!(same.contains(0.0), "{same:?}");
    }

    #[test]
    fn bootstrap_is_deterministic_in_the_seed() {
        let data = vec![0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let a = bootstrap_mean_ci(&data, 300, 0.9, 11).unwrap();
        let b = bootstrap_mean_ci(&data, 300, 0.9, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn indicator_maps_bools() {
        assert_eq!(indicator(&[true, false, true]), vec![1.0, 0.0, 1.0]);
    }
}
