//! Fully connected regression head: ReLU hidden layers, sigmoid output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Hidden widths of the default head, after the 8192-wide input.
pub const HEAD_WIDTHS: [usize; 5] = [super::FEATURE_LEN, 128, 64, 64, 64];

/// Sigmoid outputs are kept inside `[P_MIN, 1 - P_MIN]` so the mapped angle
/// stays strictly inside the open interval in floating point (about 2e-10
/// degrees from either end).
const P_MIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `[out][in]`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.weights[r * self.inputs..(r + 1) * self.inputs]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs).map(|r| self.bias[r] + dot(self.row(r), x)).collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize without reassociation flags.
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * i + k] * b[4 * i + k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub(crate) fn relu(z: f64) -> f64 {
    // Unlike f64::max, keeps NaN visible to the divergence guard.
    if z < 0.0 {
        0.0
    } else {
        z
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(P_MIN, 1.0 - P_MIN)
}

/// Dense stack ending in a single sigmoid unit.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionHead {
    pub layers: Vec<Dense>,
}

/// Pre-activations and activations of one forward pass.
pub struct HeadTrace {
    /// `acts[0]` is the input; `acts[l + 1]` is the output of layer `l`.
    pub acts: Vec<Vec<f64>>,
    pub pre: Vec<Vec<f64>>,
}

impl HeadTrace {
    pub fn output(&self) -> f64 {
        self.acts.last().expect("non-empty")[0]
    }
}

impl RegressionHead {
    /// He-normal hidden layers and a Glorot-normal output layer.
    /// `widths` lists the input width then every hidden width.
    pub fn random(widths: &[usize], seed: u64) -> Result<Self> {
        if widths.is_empty() || widths.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad head widths {widths:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = widths.to_vec();
        dims.push(1);
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|l| {
                let (fan_in, fan_out) = (dims[l], dims[l + 1]);
                let var = if l + 1 == n {
                    2.0 / (fan_in + fan_out) as f64
                } else {
                    2.0 / fan_in as f64
                };
                let normal = Normal::new(0.0, var.sqrt()).expect("positive std");
                let mut d = Dense::zeros(fan_in, fan_out);
                d.weights.iter_mut().for_each(|w| *w = normal.sample(&mut rng));
                d
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn default_random(seed: u64) -> Self {
        Self::random(&HEAD_WIDTHS, seed).expect("valid default widths")
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_len() {
            return Err(Error::DimensionMismatch {
                expected: self.input_len(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn trace(&self, x: &[f64]) -> Result<HeadTrace> {
        self.check_input(x)?;
        let n = self.layers.len();
        let mut acts = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(n);
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(&acts[l]);
            let a = if l + 1 == n {
                z.iter().map(|&v| sigmoid(v)).collect()
            } else {
                z.iter().map(|&v| relu(v)).collect()
            };
            pre.push(z);
            acts.push(a);
        }
        Ok(HeadTrace { acts, pre })
    }

    /// Normalized prediction in `(0, 1)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        Ok(self.trace(x)?.output())
    }

    /// Adds `scale * dLoss/dparams` for one sample to `grads`, where the
    /// loss is `(p - target)^2`.
    pub fn accumulate_grad(&self, trace: &HeadTrace, target: f64, scale: f64, grads: &mut RegressionHead) {
        let n = self.layers.len();
        let p = trace.output();
        let mut delta = vec![scale * 2.0 * (p - target) * p * (1.0 - p)];
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let input = &trace.acts[l];
            let g = &mut grads.layers[l];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[r] += d;
                let row = &mut g.weights[r * layer.inputs..(r + 1) * layer.inputs];
                for (w, &a) in row.iter_mut().zip(input) {
                    *w += d * a;
                }
            }
            if l == 0 {
                break;
            }
            let below = &trace.pre[l - 1];
            let mut next = vec![0.0; layer.inputs];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (acc, &w) in next.iter_mut().zip(layer.row(r)) {
                    *acc += d * w;
                }
            }
            for (v, &z) in next.iter_mut().zip(below) {
                if z <= 0.0 {
                    *v = 0.0;
                }
            }
            delta = next;
        }
    }

    /// Flat views for optimizers, in layer order (weights then bias).
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn params(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }
}

/// Mean squared error over paired predictions and targets.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch(pred.len(), target.len()));
    }
    if pred.is_empty() {
        return Err(Error::Empty);
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert!((mse_loss(&[0.0, 1.0], &[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(mse_loss(&[0.1], &[0.1, 0.2]), Err(Error::LengthMismatch(1, 2))));
        assert!(matches!(mse_loss(&[], &[]), Err(Error::Empty)));
    }

    #[test]
    fn forward_stays_in_open_interval() {
        let head = RegressionHead::random(&[4, 3], 1).unwrap();
        for x in [[0.0; 4], [1e6; 4], [-1e6, 1e6, -1e6, 1e6]] {
            let p = head.forward(&x).unwrap();
            assert!(p > 0.0 && p < 1.0, "{p}");
        }
    }

    #[test]
    fn wrong_input_length() {
        let head = RegressionHead::random(&[4, 3], 1).unwrap();
        assert!(matches!(
            head.forward(&[0.0; 5]),
            Err(Error::DimensionMismatch { expected: 4, got: 5 })
        ));
    }

    #[test]
    fn default_shape() {
        let head = RegressionHead::default_random(0);
        let dims: Vec<_> = head.layers.iter().map(|l| (l.inputs, l.outputs)).collect();
        assert_eq!(dims, vec![(8192, 128), (128, 64), (64, 64), (64, 64), (64, 1)]);
    }

    #[test]
    fn sigmoid_symmetry() {
        for z in [-3.0, -0.2, 0.0, 1.5] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() < 1e-15);
        }
        assert_eq!(sigmoid(0.0), 0.5);
    }
}
