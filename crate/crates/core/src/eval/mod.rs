//! Error statistics, sliced evaluation, runtime comparison and reports.

mod bench;
mod report;
mod stats;

pub use bench::{bench_estimators, bench_runtime, BenchResult, REFERENCE_RUNTIME_RATIO};
pub use report::{parse_csv_report, render_report, ReportFormat, CSV_HEADER};
pub use stats::{aee, summarize, AEEStats};

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::raster::RgbImage;
use crate::regressor::{load_model, predict_angle, RegressionModel};
use crate::vision::{run_baseline, PipelineConfig};

/// Angle estimator under evaluation.
#[derive(Clone, Debug)]
pub enum Estimator {
    Baseline(PipelineConfig),
    Model(Arc<RegressionModel>),
}

impl Estimator {
    pub fn model_from_path(path: &Path) -> Result<Self> {
        Ok(Self::Model(Arc::new(load_model(path)?)))
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::Baseline(_) => "baseline",
            Self::Model(_) => "model",
        }
    }

    /// Angle in degrees, or the estimator's domain error.
    pub fn estimate(&self, img: &RgbImage) -> Result<f64> {
        match self {
            Self::Baseline(cfg) => run_baseline(img, cfg).map(|e| e.theta_deg),
            Self::Model(m) => Ok(predict_angle(m, img).theta_deg),
        }
    }
}

/// Outcome for one manifest entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub path: String,
    pub truth: f64,
    pub blur: bool,
    /// `None` when the estimator failed.
    pub estimate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub raw: AEEStats,
    pub blurry: AEEStats,
    pub all: AEEStats,
    pub estimator: String,
    pub source: String,
    pub runtime_ratio: Option<f64>,
    pub records: Vec<Record>,
}

impl EvalReport {
    /// Builds slice statistics from per-entry records.
    pub fn from_records(estimator: &str, source: &str, records: Vec<Record>) -> Result<Self> {
        let slice = |pick: &dyn Fn(&Record) -> bool| -> Result<AEEStats> {
            let mut errs = Vec::new();
            let mut fails = 0;
            for r in records.iter().filter(|r| pick(r)) {
                match r.estimate {
                    Some(e) => errs.push(aee(e, r.truth)?),
                    None => fails += 1,
                }
            }
            Ok(AEEStats {
                fail_count: fails,
                ..summarize(&errs)
            })
        };
        Ok(Self {
            raw: slice(&|r| !r.blur)?,
            blurry: slice(&|r| r.blur)?,
            all: slice(&|_| true)?,
            estimator: estimator.to_string(),
            source: source.to_string(),
            runtime_ratio: None,
            records,
        })
    }

    pub fn empty(estimator: &str) -> Self {
        Self::from_records(estimator, "", Vec::new()).expect("no records to check")
    }
}

/// Runs `est` over every entry (parallel per image); estimator errors count
/// as failures, loading errors abort.
pub fn evaluate(est: &Estimator, m: &DatasetManifest) -> Result<EvalReport> {
    if m.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let records = m
        .entries
        .par_iter()
        .map(|e| {
            let img = m.load_entry(e)?;
            Ok(Record {
                path: e.path.clone(),
                truth: e.angle_deg,
                blur: e.blur,
                estimate: est.estimate(&img).ok(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_records(est.tag(), &m.root.display().to_string(), records)
}
