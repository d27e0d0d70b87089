//! The semicircle law on `[-2, 2]` and comparisons of samples against it.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_BINS: usize = 8;

/// `√(4 − x²) / (2π)` on `[-2, 2]`, zero outside.
pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

pub fn semicircle_cdf(x: f64) -> f64 {
    if x <= -2.0 {
        0.0
    } else if x >= 2.0 {
        1.0
    } else {
        let v = 0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI;
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    /// Fraction of all values in the bin divided by the bin width.
    pub empirical_density: f64,
    /// Semicircle density averaged over the bin.
    pub semicircle_density: f64,
}

/// Density histogram of `values` over `range` with `bins` equal bins. Values
/// outside the range count toward the total but land in no bin.
pub fn histogram(values: &[f64], bins: usize, range: (f64, f64)) -> Result<Vec<HistogramBin>> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if bins < MIN_BINS {
        return Err(Error::out_of_range("bins", bins, ">= 8"));
    }
    let (lo, hi) = range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::out_of_range("range", format!("[{lo}, {hi}]"), "finite, lo < hi"));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let total = values.len() as f64;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let left = lo + b as f64 * width;
            let right = if b + 1 == bins { hi } else { lo + (b + 1) as f64 * width };
            HistogramBin {
                left,
                right,
                empirical_density: c as f64 / (total * (right - left)),
                semicircle_density: (semicircle_cdf(right) - semicircle_cdf(left)) / (right - left),
            }
        })
        .collect())
}

/// Kolmogorov distance between the empirical distribution of `values` and the
/// semicircle law.
pub fn ks_distance(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .fold(0.0f64, |d, (i, &x)| {
            let f = semicircle_cdf(x);
            d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
        }))
}
