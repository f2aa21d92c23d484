//! Small descriptive statistics used across the crate.

use crate::error::{Error, Result};

/// Sample quantile of already sorted values by linear interpolation between
/// order statistics: with `h = (n - 1) p`, returns
/// `x[floor(h)] + (h - floor(h)) (x[floor(h) + 1] - x[floor(h)])`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with `n - 1` denominator.
pub fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

/// Standard error of the mean from non-overlapping batch means, which absorbs
/// autocorrelation shorter than the batch length.
pub fn batch_means_se(values: &[f64], n_batches: usize) -> Result<f64> {
    if n_batches < 2 || values.len() < 2 * n_batches {
        return Err(Error::config(format!(
            "need at least {} values for {n_batches} batches",
            2 * n_batches
        )));
    }
    let size = values.len() / n_batches;
    let means: Vec<f64> = values
        .chunks_exact(size)
        .take(n_batches)
        .map(mean)
        .collect();
    Ok((variance(&means) / n_batches as f64).sqrt())
}
