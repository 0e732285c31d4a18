//! Sequential wall-time comparison of two estimators.

use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use super::Estimator;
use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::raster::RgbImage;
use crate::vision::PipelineConfig;

/// Published model/baseline slowdown, printed for context only.
pub const REFERENCE_RUNTIME_RATIO: f64 = 4.88;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchResult {
    /// Median seconds per image of the first estimator.
    pub first_per_image: f64,
    /// Median seconds per image of the second estimator.
    pub second_per_image: f64,
    /// `second / first`.
    pub ratio: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn time_pass(est: &Estimator, images: &[RgbImage]) -> (f64, usize) {
    let start = Instant::now();
    let ok = images.iter().filter(|img| black_box(est.estimate(img)).is_ok()).count();
    (start.elapsed().as_secs_f64() / images.len() as f64, ok)
}

/// Times both estimators over the raw (unblurred) slice, alternating passes,
/// on the calling thread only.
pub fn bench_estimators(
    first: &Estimator,
    second: &Estimator,
    m: &DatasetManifest,
    repeats: usize,
) -> Result<BenchResult> {
    if repeats < 3 {
        return Err(Error::InvalidConfig(format!("need at least 3 repeats, got {repeats}")));
    }
    let images = m
        .entries
        .iter()
        .filter(|e| !e.blur)
        .map(|e| m.load_entry(e))
        .collect::<Result<Vec<_>>>()?;
    if images.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mut ta, mut tb) = (Vec::with_capacity(repeats), Vec::with_capacity(repeats));
    for _ in 0..repeats {
        let (a, ok_a) = time_pass(first, &images);
        let (b, ok_b) = time_pass(second, &images);
        if ok_a == 0 || ok_b == 0 {
            return Err(Error::DetectionFailed);
        }
        ta.push(a);
        tb.push(b);
    }
    let (a, b) = (median(ta), median(tb));
    Ok(BenchResult {
        first_per_image: a,
        second_per_image: b,
        ratio: b / a,
    })
}

/// Model time over baseline time per image.
pub fn bench_runtime(cfg: &PipelineConfig, model_path: &Path, m: &DatasetManifest, repeats: usize) -> Result<BenchResult> {
    let model = Estimator::model_from_path(model_path)?;
    bench_estimators(&Estimator::Baseline(*cfg), &model, m, repeats)
}
