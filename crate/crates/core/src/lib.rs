//! Marker-based angular position estimation.
//!
//! Two estimators read the angle of a dark rectangular marker on a rotating
//! arm:
//!
//! * [`vision::run_baseline`]: grayscale, inverted binary threshold, Canny,
//!   Suzuki–Abe border following, Douglas–Peucker simplification, quad
//!   selection by vertex count and area, and the angle of the line joining
//!   the midpoints of the marker's short sides.
//! * [`regressor::predict_angle`]: a frozen convolutional feature extractor
//!   followed by a trainable 128/64/64/64 fully connected head with a sigmoid
//!   output, trained by mean squared error.
//!
//! [`synth`] renders scenes with exact ground truth (including multi-exposure
//! motion blur), [`dataset`] handles manifests, augmentation and holdout
//! splits, and [`eval`] computes absolute-error statistics and runtime
//! comparisons.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod raster;
pub mod regressor;
pub mod synth;
pub mod vision;

pub use error::{Error, Result};
