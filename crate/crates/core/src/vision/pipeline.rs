use super::canny::canny;
use super::config::{ContourSource, PipelineConfig};
use super::contour::{trace_contours, BorderKind};
use super::geometry::{
    estimate_angle, select_marker, short_side_midpoints, AngleEstimate, EstimateMethod, Polygon,
    Quad,
};
use super::simplify::simplify_contour;
use super::threshold::binary_threshold;
use crate::error::{Error, Result};
use crate::raster::RgbImage;

/// Runs the detector up to marker selection.
pub fn detect_marker(img: &RgbImage, cfg: &PipelineConfig) -> Result<Quad> {
    cfg.validate()?;
    let gray = img.to_grayscale();
    let binary = binary_threshold(&gray, cfg.threshold, true);
    let traced = match cfg.contour_source {
        ContourSource::Edges => {
            let edges = canny(&binary.to_gray(), cfg.canny_low, cfg.canny_high)?;
            trace_contours(&edges)
        }
        ContourSource::Threshold => trace_contours(&binary),
    };
    let polys: Vec<Polygon> = traced
        .iter()
        .filter(|c| c.kind == BorderKind::Outer && c.points.len() >= 4)
        .filter_map(|c| simplify_contour(c, cfg.dp_epsilon_frac * c.perimeter()).ok())
        .collect();
    let area = (img.width() * img.height()) as f64;
    select_marker(&polys, area, cfg)
}

/// Full classical estimate. Any quad that cannot be read as a rectangle is
/// reported as a detection failure.
pub fn run_baseline(img: &RgbImage, cfg: &PipelineConfig) -> Result<AngleEstimate> {
    let quad = detect_marker(img, cfg)?;
    let mids = short_side_midpoints(&quad).map_err(|_| Error::DetectionFailed)?;
    let theta = estimate_angle(&mids).map_err(|_| Error::DetectionFailed)?;
    Ok(AngleEstimate {
        theta_deg: theta,
        method: EstimateMethod::Baseline,
        quad: Some(quad),
    })
}
