//! Absolute estimation error and its summary statistics.

use crate::error::{Error, Result};

/// Linear absolute error in degrees; both angles must lie in `[-90, 90]`.
pub fn aee(pred: f64, truth: f64) -> Result<f64> {
    for v in [pred, truth] {
        if !(-90.0..=90.0).contains(&v) {
            return Err(Error::OutOfRange {
                value: v,
                min: -90.0,
                max: 90.0,
            });
        }
    }
    Ok((pred - truth).abs())
}

/// Summary of a set of absolute errors, plus the number of failed estimates.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AEEStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Nearest-rank 90th percentile.
    pub p90: f64,
    pub fail_count: usize,
}

/// Mean, median, population std and nearest-rank p90. Empty input gives
/// all zeros.
pub fn summarize(errors: &[f64]) -> AEEStats {
    let n = errors.len();
    if n == 0 {
        return AEEStats::default();
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Summing the sorted values makes the result independent of input order;
    // equal values short-circuit so their spread is exactly zero.
    let mean = if sorted[0] == sorted[n - 1] {
        sorted[0]
    } else {
        sorted.iter().sum::<f64>() / n as f64
    };
    let var = sorted.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let rank = (0.9 * n as f64).ceil() as usize;
    AEEStats {
        n,
        mean,
        median,
        std: var.sqrt(),
        p90: sorted[rank.clamp(1, n) - 1],
        fail_count: 0,
    }
}
