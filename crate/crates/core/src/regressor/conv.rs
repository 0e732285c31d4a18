//! Three-block convolutional feature extractor (3x3 conv, ReLU, 2x2 max-pool)
//! with the backward pass needed to pretrain it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{FEATURE_LEN, INPUT_SIDE};
use crate::raster::{luma, resize_area, RgbImage};

/// Channel progression of the three blocks, input first.
pub const CONV_CHANNELS: [usize; 4] = [1, 8, 16, 32];

/// 3x3 convolution with zero "same" padding.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub in_ch: usize,
    pub out_ch: usize,
    /// `[out][in][ky][kx]`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(in_ch: usize, out_ch: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            weights: vec![0.0; out_ch * in_ch * 9],
            bias: vec![0.0; out_ch],
        }
    }

    fn he(in_ch: usize, out_ch: usize, rng: &mut ChaCha8Rng) -> Self {
        let std = (2.0 / (in_ch * 9) as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        let mut layer = Self::zeros(in_ch, out_ch);
        layer.weights.iter_mut().for_each(|w| *w = normal.sample(rng));
        layer
    }

    #[inline]
    fn w(&self, o: usize, i: usize, k: usize) -> f64 {
        self.weights[(o * self.in_ch + i) * 9 + k]
    }

    /// `input` is `in_ch x side x side`; output is `out_ch x side x side`.
    fn forward(&self, input: &[f64], side: usize) -> Vec<f64> {
        let plane = side * side;
        let mut out = vec![0.0; self.out_ch * plane];
        for o in 0..self.out_ch {
            let dst = &mut out[o * plane..(o + 1) * plane];
            dst.iter_mut().for_each(|v| *v = self.bias[o]);
            for i in 0..self.in_ch {
                let src = &input[i * plane..(i + 1) * plane];
                for k in 0..9 {
                    let wv = self.w(o, i, k);
                    if wv == 0.0 {
                        continue;
                    }
                    for_each_tap_row(side, k, |y_out, y_in, xo, xi, len| {
                        let d = &mut dst[y_out * side + xo..y_out * side + xo + len];
                        let s = &src[y_in * side + xi..y_in * side + xi + len];
                        for (a, b) in d.iter_mut().zip(s) {
                            *a += wv * b;
                        }
                    });
                }
            }
        }
        out
    }

    /// Accumulates weight and bias gradients from `grad_out` and returns the
    /// gradient with respect to the input when `want_input` is set.
    fn backward(
        &self,
        input: &[f64],
        grad_out: &[f64],
        side: usize,
        grads: &mut ConvLayer,
        want_input: bool,
    ) -> Option<Vec<f64>> {
        let plane = side * side;
        let mut grad_in = want_input.then(|| vec![0.0; self.in_ch * plane]);
        for o in 0..self.out_ch {
            let g = &grad_out[o * plane..(o + 1) * plane];
            grads.bias[o] += g.iter().sum::<f64>();
            for i in 0..self.in_ch {
                let src = &input[i * plane..(i + 1) * plane];
                for k in 0..9 {
                    let mut acc = 0.0;
                    for_each_tap_row(side, k, |y_out, y_in, xo, xi, len| {
                        let gg = &g[y_out * side + xo..y_out * side + xo + len];
                        let s = &src[y_in * side + xi..y_in * side + xi + len];
                        acc += gg.iter().zip(s).map(|(a, b)| a * b).sum::<f64>();
                    });
                    grads.weights[(o * self.in_ch + i) * 9 + k] += acc;
                    if let Some(gi) = grad_in.as_mut() {
                        let wv = self.w(o, i, k);
                        let gi = &mut gi[i * plane..(i + 1) * plane];
                        for_each_tap_row(side, k, |y_out, y_in, xo, xi, len| {
                            let d = &mut gi[y_in * side + xi..y_in * side + xi + len];
                            let gg = &g[y_out * side + xo..y_out * side + xo + len];
                            for (a, b) in d.iter_mut().zip(gg) {
                                *a += wv * b;
                            }
                        });
                    }
                }
            }
        }
        grad_in
    }
}

/// Visits the valid row spans for kernel tap `k` (row-major 3x3):
/// `(output row, input row, output x start, input x start, span length)`.
#[inline]
fn for_each_tap_row(side: usize, k: usize, mut f: impl FnMut(usize, usize, usize, usize, usize)) {
    let dy = (k / 3) as isize - 1;
    let dx = (k % 3) as isize - 1;
    let s = side as isize;
    let (y0, y1) = ((-dy).max(0), (s - dy).min(s));
    let (x0, x1) = ((-dx).max(0), (s - dx).min(s));
    let len = (x1 - x0) as usize;
    for y in y0..y1 {
        f(y as usize, (y + dy) as usize, x0 as usize, (x0 + dx) as usize, len);
    }
}

/// ReLU followed by 2x2 max-pool. Returns pooled values and, per pooled
/// cell, the flat index of the winning input.
fn relu_pool(z: &[f64], channels: usize, side: usize) -> (Vec<f64>, Vec<u32>) {
    let half = side / 2;
    let mut out = Vec::with_capacity(channels * half * half);
    let mut arg = Vec::with_capacity(channels * half * half);
    for c in 0..channels {
        let base = c * side * side;
        for y in 0..half {
            for x in 0..half {
                let cands = [
                    base + 2 * y * side + 2 * x,
                    base + 2 * y * side + 2 * x + 1,
                    base + (2 * y + 1) * side + 2 * x,
                    base + (2 * y + 1) * side + 2 * x + 1,
                ];
                let mut best = cands[0];
                for &i in &cands[1..] {
                    if z[i] > z[best] {
                        best = i;
                    }
                }
                out.push(z[best].max(0.0));
                arg.push(best as u32);
            }
        }
    }
    (out, arg)
}

/// Activations kept for the backward pass.
pub(crate) struct ConvTrace {
    inputs: Vec<Vec<f64>>,
    pre_act: Vec<Vec<f64>>,
    argmax: Vec<Vec<u32>>,
}

/// Frozen-able convolutional stack mapping a 128x128 gray input to 8192
/// features.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureExtractor {
    pub layers: Vec<ConvLayer>,
    pub frozen: bool,
}

impl FeatureExtractor {
    /// He-initialized, unfrozen stack.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = CONV_CHANNELS
            .windows(2)
            .map(|w| ConvLayer::he(w[0], w[1], &mut rng))
            .collect();
        Self {
            layers,
            frozen: false,
        }
    }

    pub fn zeros() -> Self {
        Self {
            layers: CONV_CHANNELS
                .windows(2)
                .map(|w| ConvLayer::zeros(w[0], w[1]))
                .collect(),
            frozen: false,
        }
    }

    pub fn frozen(mut self) -> Self {
        self.frozen = true;
        self
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Little-endian bytes of every weight then bias, layer by layer.
    pub fn weight_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.param_count() * 8);
        for l in &self.layers {
            for v in l.weights.iter().chain(&l.bias) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// CRC32 over [`Self::weight_bytes`].
    pub fn digest(&self) -> u32 {
        crc32fast::hash(&self.weight_bytes())
    }

    /// Forward pass on a prepared `128 x 128` input plane.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        let mut side = INPUT_SIDE;
        for l in &self.layers {
            let z = l.forward(&x, side);
            x = relu_pool(&z, l.out_ch, side).0;
            side /= 2;
        }
        debug_assert_eq!(x.len(), FEATURE_LEN);
        x
    }

    pub(crate) fn forward_traced(&self, input: &[f64]) -> (Vec<f64>, ConvTrace) {
        let mut trace = ConvTrace {
            inputs: Vec::with_capacity(self.layers.len()),
            pre_act: Vec::with_capacity(self.layers.len()),
            argmax: Vec::with_capacity(self.layers.len()),
        };
        let mut x = input.to_vec();
        let mut side = INPUT_SIDE;
        for l in &self.layers {
            let z = l.forward(&x, side);
            let (pooled, arg) = relu_pool(&z, l.out_ch, side);
            trace.inputs.push(std::mem::replace(&mut x, pooled));
            trace.pre_act.push(z);
            trace.argmax.push(arg);
            side /= 2;
        }
        (x, trace)
    }

    /// Backpropagates a feature gradient, accumulating into `grads`.
    pub(crate) fn backward(&self, trace: &ConvTrace, grad_features: &[f64], grads: &mut FeatureExtractor) {
        let mut g = grad_features.to_vec();
        let n = self.layers.len();
        for li in (0..n).rev() {
            let side = INPUT_SIDE >> li;
            let layer = &self.layers[li];
            let z = &trace.pre_act[li];
            let mut gz = vec![0.0; z.len()];
            for (&idx, &gv) in trace.argmax[li].iter().zip(&g) {
                let idx = idx as usize;
                if z[idx] > 0.0 {
                    gz[idx] += gv;
                }
            }
            let gi = layer.backward(&trace.inputs[li], &gz, side, &mut grads.layers[li], li > 0);
            if let Some(gi) = gi {
                g = gi;
            }
        }
    }
}

/// Area-resize to 128x128, Rec.601 gray, scale to `[0, 1]`.
pub fn prepare_input(img: &RgbImage) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let planes: Vec<Vec<f64>> = (0..3)
        .map(|c| resize_area(&img.channel_plane(c), w, h, INPUT_SIDE, INPUT_SIDE))
        .collect();
    (0..INPUT_SIDE * INPUT_SIDE)
        .map(|i| luma(planes[0][i], planes[1][i], planes[2][i]) / 255.0)
        .collect()
}

/// Deterministic feature vector of length 8192 for any input size.
pub fn extract_features(fe: &FeatureExtractor, img: &RgbImage) -> Vec<f64> {
    fe.forward(&prepare_input(img))
}
