//! Pretraining of the convolutional stack on a coarse angle-bin task. The
//! linear classifier used here is thrown away afterwards.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::conv::{prepare_input, FeatureExtractor};
use super::head::dot;
use super::optim::{Hyperparams, Optimizer};
use super::FEATURE_LEN;
use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::raster::RgbImage;

/// Linear softmax classifier over equal-width angle bins.
#[derive(Clone, Debug)]
pub struct BinClassifier {
    pub bins: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl BinClassifier {
    fn zeros(bins: usize) -> Self {
        Self {
            bins,
            weights: vec![0.0; bins * FEATURE_LEN],
            bias: vec![0.0; bins],
        }
    }

    pub fn logits(&self, f: &[f64]) -> Vec<f64> {
        (0..self.bins)
            .map(|b| self.bias[b] + dot(&self.weights[b * FEATURE_LEN..(b + 1) * FEATURE_LEN], f))
            .collect()
    }

    pub fn predict(&self, f: &[f64]) -> usize {
        let l = self.logits(f);
        (0..self.bins).fold(0, |best, b| if l[b] > l[best] { b } else { best })
    }
}

/// Bin index of an angle over `[-90, 90]`; 90 falls into the last bin.
pub fn angle_bin(angle_deg: f64, bins: usize) -> usize {
    let t = ((angle_deg + 90.0) / 180.0 * bins as f64).floor();
    (t.max(0.0) as usize).min(bins - 1)
}

/// Result of [`pretrain`], keeping the probe classifier for diagnostics.
pub struct Pretrained {
    pub extractor: FeatureExtractor,
    pub classifier: BinClassifier,
    pub epoch_losses: Vec<f64>,
}

impl Pretrained {
    /// Fraction of `(input, angle)` pairs whose bin is predicted correctly.
    pub fn bin_accuracy(&self, manifest: &DatasetManifest) -> Result<f64> {
        let (inputs, labels) = load_inputs(manifest, self.classifier.bins)?;
        Ok(self.accuracy_on(&inputs, &labels))
    }

    /// Same as [`Self::bin_accuracy`] for in-memory images.
    pub fn bin_accuracy_images(&self, images: &[(RgbImage, f64)]) -> f64 {
        let inputs: Vec<Vec<f64>> = images.par_iter().map(|(img, _)| prepare_input(img)).collect();
        let labels: Vec<usize> = images.iter().map(|(_, a)| angle_bin(*a, self.classifier.bins)).collect();
        self.accuracy_on(&inputs, &labels)
    }

    fn accuracy_on(&self, inputs: &[Vec<f64>], labels: &[usize]) -> f64 {
        let hits = inputs
            .par_iter()
            .zip(labels.par_iter())
            .filter(|(x, &y)| self.classifier.predict(&self.extractor.forward(x)) == y)
            .count();
        hits as f64 / inputs.len().max(1) as f64
    }
}

fn load_inputs(m: &DatasetManifest, bins: usize) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    if m.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let inputs = m
        .entries
        .par_iter()
        .map(|e| m.load_entry(e).map(|img| prepare_input(&img)))
        .collect::<Result<Vec<_>>>()?;
    let labels = m.entries.iter().map(|e| angle_bin(e.angle_deg, bins)).collect();
    Ok((inputs, labels))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Trains conv stack and classifier jointly with cross-entropy.
pub fn pretrain(aux: &DatasetManifest, bins: usize, h: &Hyperparams) -> Result<Pretrained> {
    if bins < 2 {
        return Err(Error::InvalidConfig("need at least two bins".into()));
    }
    let (inputs, labels) = load_inputs(aux, bins)?;
    pretrain_inputs(&inputs, &labels, bins, h)
}

/// In-memory variant of [`pretrain`] over images and their angles.
pub fn pretrain_images(aux: &[(RgbImage, f64)], bins: usize, h: &Hyperparams) -> Result<Pretrained> {
    if bins < 2 {
        return Err(Error::InvalidConfig("need at least two bins".into()));
    }
    if aux.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let inputs: Vec<Vec<f64>> = aux.par_iter().map(|(img, _)| prepare_input(img)).collect();
    let labels: Vec<usize> = aux.iter().map(|(_, a)| angle_bin(*a, bins)).collect();
    pretrain_inputs(&inputs, &labels, bins, h)
}

fn pretrain_inputs(inputs: &[Vec<f64>], labels: &[usize], bins: usize, h: &Hyperparams) -> Result<Pretrained> {
    h.validate()?;
    let mut fe = FeatureExtractor::random(h.seed);
    let mut cls = BinClassifier::zeros(bins);
    let sizes: Vec<usize> = fe
        .layers
        .iter()
        .flat_map(|l| [l.weights.len(), l.bias.len()])
        .chain([cls.weights.len(), cls.bias.len()])
        .collect();
    let mut opt = Optimizer::new(h.optimizer, sizes);
    let mut rng = ChaCha8Rng::seed_from_u64(h.seed ^ 0x5ee_d0fc_1a55);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(h.epochs);

    for epoch in 0..h.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(h.batch_size) {
            let mut g_fe = FeatureExtractor::zeros();
            let mut g_cls = BinClassifier::zeros(bins);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (feat, trace) = fe.forward_traced(&inputs[i]);
                let p = softmax(&cls.logits(&feat));
                total -= p[labels[i]].max(1e-300).ln();
                let mut g_feat = vec![0.0; FEATURE_LEN];
                for b in 0..bins {
                    let d = scale * (p[b] - f64::from(u8::from(b == labels[i])));
                    g_cls.bias[b] += d;
                    let wrow = &cls.weights[b * FEATURE_LEN..(b + 1) * FEATURE_LEN];
                    let grow = &mut g_cls.weights[b * FEATURE_LEN..(b + 1) * FEATURE_LEN];
                    for k in 0..FEATURE_LEN {
                        grow[k] += d * feat[k];
                        g_feat[k] += d * wrow[k];
                    }
                }
                fe.backward(&trace, &g_feat, &mut g_fe);
            }
            let params = fe
                .layers
                .iter_mut()
                .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
                .chain([cls.weights.as_mut_slice(), cls.bias.as_mut_slice()]);
            let grads = g_fe
                .layers
                .iter()
                .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
                .chain([g_cls.weights.as_slice(), g_cls.bias.as_slice()]);
            opt.step(params, grads, h.learning_rate);
        }
        let mean = total / inputs.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss(epoch));
        }
        epoch_losses.push(mean);
    }
    Ok(Pretrained {
        extractor: fe.frozen(),
        classifier: cls,
        epoch_losses,
    })
}

/// Pretrains and returns only the frozen extractor.
pub fn pretrain_features(aux: &DatasetManifest, bins: usize, h: &Hyperparams) -> Result<FeatureExtractor> {
    pretrain(aux, bins, h).map(|p| p.extractor)
}
