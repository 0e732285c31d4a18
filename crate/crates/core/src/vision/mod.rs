//! Classical marker detector: threshold, edges, border following, polygon
//! simplification, quad selection and the midpoint-line angle.

mod canny;
mod config;
mod contour;
mod geometry;
mod pipeline;
mod simplify;
mod threshold;

pub use canny::{canny, CANNY_SIGMA};
pub use config::{ContourSource, PipelineConfig};
pub use contour::{trace_contours, BorderKind, Contour, PixelPoint};
pub use geometry::{
    estimate_angle, polygon_area, select_marker, short_side_midpoints, AngleEstimate,
    EstimateMethod, MidpointPair, Point, Polygon, Quad,
};
pub use pipeline::{detect_marker, run_baseline};
pub use simplify::{point_segment_distance, simplify_closed, simplify_contour, simplify_open};
pub use threshold::binary_threshold;
