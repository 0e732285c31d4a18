use std::path::Path;

use rayon::prelude::*;

use super::manifest::{DatasetManifest, LabelSource, ManifestEntry};
use crate::error::{Error, Result};
use crate::raster::load_image;
use crate::vision::{run_baseline, PipelineConfig};

/// Outcome counts of an auto-labeling pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LabelSummary {
    pub labeled: usize,
    pub skipped: usize,
}

fn is_supported(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm" | "pgm"))
        .unwrap_or(false)
}

/// Labels every image in `image_dir` with the classical detector. Images the
/// detector cannot read are skipped and counted, not treated as errors.
pub fn auto_label(
    image_dir: impl AsRef<Path>,
    cfg: &PipelineConfig,
    batch: u32,
) -> Result<(DatasetManifest, LabelSummary)> {
    let dir = image_dir.as_ref();
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file() && is_supported(p))
        .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(str::to_owned))
        .collect();
    names.sort();
    let results = names
        .par_iter()
        .map(|name| -> Result<Option<ManifestEntry>> {
            let img = load_image(dir.join(name))?;
            match run_baseline(&img, cfg) {
                Ok(est) => Ok(Some(ManifestEntry {
                    path: name.clone(),
                    angle_deg: est.theta_deg,
                    blur: false,
                    batch,
                    source: LabelSource::AutoLabel,
                })),
                Err(Error::DetectionFailed) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = LabelSummary {
        labeled: results.iter().filter(|r| r.is_some()).count(),
        skipped: results.iter().filter(|r| r.is_none()).count(),
    };
    let entries = results.into_iter().flatten().collect();
    Ok((DatasetManifest::new(dir, entries), summary))
}

/// Maps `[-90, 90]` degrees onto `[0, 1]`, the range of the regressor's
/// sigmoid output.
pub fn normalize_label(theta_deg: f64) -> Result<f64> {
    if !(-90.0..=90.0).contains(&theta_deg) {
        return Err(Error::OutOfRange {
            value: theta_deg,
            min: -90.0,
            max: 90.0,
        });
    }
    Ok((theta_deg + 90.0) / 180.0)
}

/// Grid of stored labels (manifests keep six decimals).
const LABEL_GRID: f64 = 1e6;
/// Distance within which a value is snapped onto [`LABEL_GRID`]; far above
/// the ~2e-14 error of the affine map, far below any meaningful angle.
const SNAP_TOL: f64 = 1e-11;

/// Inverse of [`normalize_label`]. Rounding in the forward map is undone
/// by snapping onto the six-decimal label grid, so every storable label
/// round-trips bit-exactly.
pub fn denormalize_label(n: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&n) {
        return Err(Error::OutOfRange {
            value: n,
            min: 0.0,
            max: 1.0,
        });
    }
    let raw = n * 180.0 - 90.0;
    let snapped = (raw * LABEL_GRID).round() / LABEL_GRID;
    Ok(if (raw - snapped).abs() <= SNAP_TOL { snapped } else { raw })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_endpoints() {
        assert_eq!(normalize_label(-90.0).unwrap(), 0.0);
        assert_eq!(normalize_label(0.0).unwrap(), 0.5);
        assert_eq!(normalize_label(90.0).unwrap(), 1.0);
        assert!(normalize_label(90.5).is_err());
        assert!(denormalize_label(-0.1).is_err());
    }

    #[test]
    fn label_round_trip_on_grid() {
        for tenth in -900..=900 {
            let theta = tenth as f64 / 10.0;
            assert_eq!(denormalize_label(normalize_label(theta).unwrap()).unwrap(), theta);
        }
        for micro in (-90_000_000i64..=90_000_000).step_by(7_919) {
            let theta: f64 = format!("{:.6}", micro as f64 / 1e6).parse().unwrap();
            assert_eq!(denormalize_label(normalize_label(theta).unwrap()).unwrap(), theta);
        }
        for deg in -90..=90 {
            let theta = deg as f64;
            assert_eq!(denormalize_label(normalize_label(theta).unwrap()).unwrap(), theta);
        }
    }
}
