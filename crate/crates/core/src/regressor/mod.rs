//! Angle regressor: frozen conv feature extractor plus a dense head with a
//! sigmoid output, fitted with mean squared error.

mod conv;
mod gradcheck;
mod head;
mod model_io;
mod optim;
mod pretrain;
mod train;

pub use conv::{extract_features, prepare_input, ConvLayer, FeatureExtractor, CONV_CHANNELS};
pub use gradcheck::{grad_check, random_case, GradCheckReport, ABS_FLOOR, DEFAULT_EPS, DEFAULT_TOLERANCE};
pub use head::{mse_loss, Dense, HeadTrace, RegressionHead, HEAD_WIDTHS};
pub use model_io::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC};
pub use optim::{Hyperparams, Optimizer, OptimizerKind};
pub use pretrain::{angle_bin, pretrain, pretrain_features, pretrain_images, BinClassifier, Pretrained};
pub use train::{evaluate_loss, featurize, fit_head, train, Sample, TrainReport};

use crate::dataset::denormalize_label;
use crate::raster::RgbImage;
use crate::vision::{AngleEstimate, EstimateMethod};

/// Side of the square network input.
pub const INPUT_SIDE: usize = 128;
/// Length of the flattened feature vector (32 channels of 16x16).
pub const FEATURE_LEN: usize = 8192;

/// Frozen extractor plus trained head.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionModel {
    pub extractor: FeatureExtractor,
    pub head: RegressionHead,
}

impl RegressionModel {
    /// Normalized output for one image.
    pub fn forward_image(&self, img: &RgbImage) -> f64 {
        let f = extract_features(&self.extractor, img);
        self.head.forward(&f).expect("extractor and head widths agree")
    }
}

/// Model estimate; always strictly inside `(-90, 90)`.
pub fn predict_angle(model: &RegressionModel, img: &RgbImage) -> AngleEstimate {
    let n = model.forward_image(img);
    AngleEstimate {
        theta_deg: denormalize_label(n).expect("sigmoid output in (0, 1)"),
        method: EstimateMethod::Model,
        quad: None,
    }
}
