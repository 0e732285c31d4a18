//! Mini-batch fitting of the regression head over frozen features.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::conv::{extract_features, FeatureExtractor};
use super::head::{RegressionHead, HEAD_WIDTHS};
use super::optim::{Hyperparams, Optimizer};
use super::RegressionModel;
use crate::dataset::{normalize_label, DatasetManifest};
use crate::error::{Error, Result};

/// Per-epoch losses (normalized-label MSE) and total wall time.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub wall_time: Duration,
}

/// A feature vector paired with its normalized label.
pub type Sample = (Vec<f64>, f64);

/// Extracts features for every manifest entry (parallel per image).
pub fn featurize(fe: &FeatureExtractor, m: &DatasetManifest) -> Result<Vec<Sample>> {
    if m.is_empty() {
        return Err(Error::EmptyDataset);
    }
    m.entries
        .par_iter()
        .map(|e| {
            let img = m.load_entry(e)?;
            Ok((extract_features(fe, &img), normalize_label(e.angle_deg)?))
        })
        .collect()
}

/// Trains a fresh head on top of a frozen extractor.
pub fn train(
    fe: &FeatureExtractor,
    train_m: &DatasetManifest,
    val_m: &DatasetManifest,
    h: &Hyperparams,
) -> Result<(RegressionModel, TrainReport)> {
    if !fe.frozen {
        return Err(Error::InvalidConfig("feature extractor must be frozen".into()));
    }
    h.validate()?;
    let digest = fe.digest();
    let train_set = featurize(fe, train_m)?;
    let val_set = featurize(fe, val_m)?;
    let (head, report) = fit_head(&HEAD_WIDTHS, &train_set, &val_set, h)?;
    assert_eq!(digest, fe.digest(), "extractor weights changed during training");
    Ok((
        RegressionModel {
            extractor: fe.clone(),
            head,
        },
        report,
    ))
}

/// Fits a head with the given widths on precomputed samples. Sequential and
/// fully determined by `h.seed`.
pub fn fit_head(
    widths: &[usize],
    train_set: &[Sample],
    val_set: &[Sample],
    h: &Hyperparams,
) -> Result<(RegressionHead, TrainReport)> {
    h.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let start = Instant::now();
    let mut head = RegressionHead::random(widths, h.seed)?;
    for (f, _) in train_set.iter().chain(val_set) {
        if f.len() != head.input_len() {
            return Err(Error::DimensionMismatch {
                expected: head.input_len(),
                got: f.len(),
            });
        }
    }
    let sizes: Vec<usize> = head.params().map(<[f64]>::len).collect();
    let mut opt = Optimizer::new(h.optimizer, sizes);
    let mut rng = ChaCha8Rng::seed_from_u64(h.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut report = TrainReport {
        train_loss: Vec::with_capacity(h.epochs),
        val_loss: Vec::with_capacity(h.epochs),
        wall_time: Duration::ZERO,
    };
    let mut grads = head.zeros_like();

    for epoch in 0..h.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(h.batch_size) {
            grads.params_mut().for_each(|g| g.fill(0.0));
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (f, t) = &train_set[i];
                let trace = head.trace(f)?;
                let p = trace.output();
                total += (p - t) * (p - t);
                head.accumulate_grad(&trace, *t, scale, &mut grads);
            }
            opt.step(head.params_mut(), grads.params(), h.learning_rate);
        }
        let train_loss = total / train_set.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::NonFiniteLoss(epoch));
        }
        report.train_loss.push(train_loss);
        report.val_loss.push(evaluate_loss(&head, val_set)?);
    }
    report.wall_time = start.elapsed();
    Ok((head, report))
}

/// MSE of `head` over samples; 0 for an empty set.
pub fn evaluate_loss(head: &RegressionHead, set: &[Sample]) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (f, t) in set {
        let p = head.forward(f)?;
        total += (p - t) * (p - t);
    }
    Ok(total / set.len() as f64)
}
