//! Central-difference check of the head's backward pass.
//!
//! Perturbing one parameter of layer `l` only moves one pre-activation of
//! that layer, so each evaluation restarts the forward pass from there.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::head::{relu, sigmoid, RegressionHead};
use crate::error::Result;

/// Gradients smaller than this (in both estimates) are compared in absolute
/// terms, where relative error is dominated by rounding.
pub const ABS_FLOOR: f64 = 1e-8;
pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    /// Max of `|a - n| / max(|a|, |n|, 1e-12)` over parameters above the floor.
    pub max_rel_error: f64,
    /// Max `|a - n|` over parameters whose gradients are below the floor.
    pub max_abs_error: f64,
    pub params: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol && self.max_abs_error <= ABS_FLOOR
    }
}

struct Probe<'a> {
    head: &'a RegressionHead,
    pre: Vec<Vec<f64>>,
    acts: Vec<Vec<f64>>,
    target: f64,
}

/// Perturbations pushed through the downstream layers together.
const CHUNK: usize = 256;

/// `relu(hi) - relu(lo)` where `hi - lo = d` is known more precisely than
/// either operand.
fn relu_diff(hi: f64, d: f64) -> f64 {
    let lo = hi - d;
    match (hi > 0.0, lo > 0.0) {
        (true, true) => d,
        (false, false) => 0.0,
        _ => relu(hi) - relu(lo),
    }
}

/// `sigmoid(a) - sigmoid(a - d)` without cancellation.
fn sigmoid_diff(a: f64, d: f64) -> f64 {
    -sigmoid(a) * sigmoid(d - a) * (-d).exp_m1()
}

impl Probe<'_> {
    /// Central differences `(L(z + s) - L(z - s)) / (2 eps)` for each step
    /// `s` on pre-activation `r` of layer `l`.
    ///
    /// Both forward passes are full evaluations, but the gap between them
    /// is carried layer by layer next to the `+` pass instead of being
    /// recovered by subtracting two rounded losses. That keeps the estimate
    /// accurate for gradients many orders below the loss itself.
    fn central_chunk(&self, l: usize, r: usize, steps: &[f64], eps: f64, out: &mut Vec<f64>) {
        let b = steps.len();
        let n = self.head.layers.len();
        let z = self.pre[l][r];
        // hi holds the `+` pass, gap the `+` minus `-` difference, one row
        // of `b` columns per unit.
        let (mut hi, mut gap): (Vec<f64>, Vec<f64>) = steps.iter().map(|s| (z + s, 2.0 * s)).unzip();
        if l + 1 < n {
            let da: Vec<f64> = hi.iter().zip(&gap).map(|(&h, &g)| relu_diff(h, g)).collect();
            if da.iter().all(|&d| d == 0.0) {
                out.extend(std::iter::repeat_n(0.0, b));
                return;
            }
            let a0 = self.acts[l + 1][r];
            let next = &self.head.layers[l + 1];
            let mut h2 = vec![0.0; next.outputs * b];
            let mut g2 = vec![0.0; next.outputs * b];
            for k in 0..next.outputs {
                let (p, w) = (self.pre[l + 1][k], next.weights[k * next.inputs + r]);
                for j in 0..b {
                    h2[k * b + j] = p + w * (relu(hi[j]) - a0);
                    g2[k * b + j] = w * da[j];
                }
            }
            (hi, gap) = (h2, g2);
            for layer in &self.head.layers[l + 2..] {
                let da: Vec<f64> = hi.iter().zip(&gap).map(|(&h, &g)| relu_diff(h, g)).collect();
                hi.iter_mut().for_each(|v| *v = relu(*v));
                let mut h2 = vec![0.0; layer.outputs * b];
                let mut g2 = vec![0.0; layer.outputs * b];
                for k in 0..layer.outputs {
                    let (hrow, grow) = (&mut h2[k * b..(k + 1) * b], &mut g2[k * b..(k + 1) * b]);
                    hrow.fill(layer.bias[k]);
                    for i in 0..layer.inputs {
                        let w = layer.weights[k * layer.inputs + i];
                        let (x, dx) = (&hi[i * b..(i + 1) * b], &da[i * b..(i + 1) * b]);
                        for j in 0..b {
                            hrow[j] += w * x[j];
                            grow[j] += w * dx[j];
                        }
                    }
                }
                (hi, gap) = (h2, g2);
            }
        }
        out.extend(hi.iter().zip(&gap).map(|(&y, &d)| {
            let (p_hi, dp) = (sigmoid(y), sigmoid_diff(y, d));
            let p_lo = p_hi - dp;
            // (p+ - t)^2 - (p- - t)^2 factored around the small difference.
            dp * (p_hi + p_lo - 2.0 * self.target) / (2.0 * eps)
        }));
    }

    fn central(&self, l: usize, r: usize, steps: &[f64], eps: f64) -> Vec<f64> {
        let mut grads = Vec::with_capacity(steps.len());
        for chunk in steps.chunks(CHUNK) {
            self.central_chunk(l, r, chunk, eps, &mut grads);
        }
        grads
    }
}

/// Compares analytic gradients of `(forward(f) - target)^2` with central
/// differences for every parameter.
pub fn grad_check(head: &RegressionHead, f: &[f64], target: f64, eps: f64) -> Result<GradCheckReport> {
    let trace = head.trace(f)?;
    let mut analytic = head.zeros_like();
    head.accumulate_grad(&trace, target, 1.0, &mut analytic);
    compare(head, f, target, eps, &analytic)
}

fn compare(
    head: &RegressionHead,
    f: &[f64],
    target: f64,
    eps: f64,
    analytic: &RegressionHead,
) -> Result<GradCheckReport> {
    let trace = head.trace(f)?;
    let probe = Probe {
        head,
        pre: trace.pre,
        acts: trace.acts,
        target,
    };

    let mut report = GradCheckReport::default();
    let mut record = |a: f64, n: f64| {
        let diff = (a - n).abs();
        let mag = a.abs().max(n.abs());
        if mag < ABS_FLOOR {
            report.max_abs_error = report.max_abs_error.max(diff);
        } else {
            report.max_rel_error = report.max_rel_error.max(diff / mag.max(1e-12));
        }
        report.params += 1;
    };
    for (l, layer) in head.layers.iter().enumerate() {
        // A weight step of eps moves the pre-activation by eps * input; the
        // bias step moves it by eps.
        let steps: Vec<f64> = probe.acts[l].iter().map(|x| eps * x).chain([eps]).collect();
        for r in 0..layer.outputs {
            let numeric = probe.central(l, r, &steps, eps);
            let row = &analytic.layers[l].weights[r * layer.inputs..(r + 1) * layer.inputs];
            for (&a, &n) in row.iter().zip(&numeric) {
                record(a, n);
            }
            record(analytic.layers[l].bias[r], numeric[layer.inputs]);
        }
    }
    Ok(report)
}

/// Random head (with non-zero biases), input in `[0, 1)` and target in
/// `(0, 1)`, all from `seed`.
pub fn random_case(widths: &[usize], seed: u64) -> Result<(RegressionHead, Vec<f64>, f64)> {
    let mut head = RegressionHead::random(widths, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd_ef01);
    for l in &mut head.layers {
        l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.1..0.1));
    }
    let f: Vec<f64> = (0..widths[0]).map(|_| rng.random::<f64>()).collect();
    let target = rng.random_range(0.05..0.95);
    Ok((head, f, target))
}
