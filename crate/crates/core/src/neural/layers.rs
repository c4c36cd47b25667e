//! Forward and backward kernels for the network's layers. Activations are
//! row-major `length × channels` buffers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::PipelineRng;
use crate::{Error, Result};

/// Shape of a valid (unpadded) 1D convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub len: usize,
    pub channels: usize,
    pub filters: usize,
    pub kernel: usize,
}

impl ConvShape {
    pub fn out_len(&self) -> usize {
        self.len + 1 - self.kernel
    }

    fn check(&self, input: &[f64], weights: &[f64], bias: &[f64]) -> Result<()> {
        if self.kernel == 0 || self.len < self.kernel {
            return Err(Error::ShapeMismatch(format!("kernel {} longer than input {}", self.kernel, self.len)));
        }
        if input.len() != self.len * self.channels {
            return Err(Error::ShapeMismatch(format!("input has {} values, expected {}", input.len(), self.len * self.channels)));
        }
        if weights.len() != self.filters * self.kernel * self.channels || bias.len() != self.filters {
            return Err(Error::ShapeMismatch("convolution weights do not match F × K × C".into()));
        }
        Ok(())
    }
}

/// Valid cross-correlation plus bias, then ReLU.
/// `weights` is `filters × kernel × channels`; output is `(len − kernel + 1) × filters`.
pub fn conv1d_forward(shape: ConvShape, input: &[f64], weights: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
    shape.check(input, weights, bias)?;
    let mut out = vec![0.0; shape.out_len() * shape.filters];
    conv1d_forward_into(shape, input, weights, bias, &mut out);
    Ok(out)
}

pub(crate) fn conv1d_forward_into(shape: ConvShape, input: &[f64], weights: &[f64], bias: &[f64], out: &mut [f64]) {
    let patch_len = shape.kernel * shape.channels;
    for t in 0..shape.out_len() {
        // rows t..t+K of a row-major input are contiguous and match the K × C kernel layout
        let patch = &input[t * shape.channels..t * shape.channels + patch_len];
        let row = &mut out[t * shape.filters..(t + 1) * shape.filters];
        for (f, o) in row.iter_mut().enumerate() {
            let w = &weights[f * patch_len..(f + 1) * patch_len];
            let mut s = bias[f];
            for (a, b) in patch.iter().zip(w) {
                s += a * b;
            }
            *o = if s > 0.0 { s } else { 0.0 };
        }
    }
}

/// Backward of [`conv1d_forward`]. `out` is the post-ReLU forward output and
/// `d_out` the loss gradient with respect to it. Accumulates into `d_weights`
/// and `d_bias`; writes `d_input` when given.
pub(crate) fn conv1d_backward(
    shape: ConvShape,
    input: &[f64],
    weights: &[f64],
    out: &[f64],
    d_out: &[f64],
    d_weights: &mut [f64],
    d_bias: &mut [f64],
    mut d_input: Option<&mut [f64]>,
) {
    let patch_len = shape.kernel * shape.channels;
    if let Some(di) = d_input.as_deref_mut() {
        di.iter_mut().for_each(|v| *v = 0.0);
    }
    for t in 0..shape.out_len() {
        let patch = &input[t * shape.channels..t * shape.channels + patch_len];
        for f in 0..shape.filters {
            let idx = t * shape.filters + f;
            if out[idx] <= 0.0 {
                continue;
            }
            let g = d_out[idx];
            if g == 0.0 {
                continue;
            }
            d_bias[f] += g;
            let dw = &mut d_weights[f * patch_len..(f + 1) * patch_len];
            for (d, &p) in dw.iter_mut().zip(patch) {
                *d += g * p;
            }
            if let Some(di) = d_input.as_deref_mut() {
                let w = &weights[f * patch_len..(f + 1) * patch_len];
                let dpatch = &mut di[t * shape.channels..t * shape.channels + patch_len];
                for (d, &wv) in dpatch.iter_mut().zip(w) {
                    *d += g * wv;
                }
            }
        }
    }
}

/// Non-overlapping max pooling along the length axis; the tail that does
/// not fill a pool is dropped. Returns the pooled values and, per output,
/// the flat input index of the maximum (first on ties).
pub fn maxpool1d(input: &[f64], len: usize, channels: usize, pool: usize) -> Result<(Vec<f64>, Vec<usize>)> {
    if pool == 0 || len < pool || input.len() != len * channels {
        return Err(Error::ShapeMismatch(format!("cannot pool {len} × {channels} by {pool}")));
    }
    let out_len = len / pool;
    let mut out = vec![0.0; out_len * channels];
    let mut arg = vec![0usize; out_len * channels];
    maxpool1d_into(input, channels, pool, &mut out, &mut arg);
    Ok((out, arg))
}

pub(crate) fn maxpool1d_into(input: &[f64], channels: usize, pool: usize, out: &mut [f64], arg: &mut [usize]) {
    let out_len = out.len() / channels;
    for t in 0..out_len {
        for c in 0..channels {
            let mut best = (t * pool) * channels + c;
            for k in 1..pool {
                let idx = (t * pool + k) * channels + c;
                if input[idx] > input[best] {
                    best = idx;
                }
            }
            out[t * channels + c] = input[best];
            arg[t * channels + c] = best;
        }
    }
}

/// Routes each pooled gradient to its argmax position.
pub fn maxpool1d_backward(d_out: &[f64], argmax: &[usize], d_input: &mut [f64]) {
    d_input.iter_mut().for_each(|v| *v = 0.0);
    for (&g, &i) in d_out.iter().zip(argmax) {
        d_input[i] += g;
    }
}

/// `y = W x + b` with `W` row-major `out × in`.
pub fn dense_forward(x: &[f64], weights: &[f64], bias: &[f64]) -> Result<Vec<f64>> {
    if bias.is_empty() || weights.len() != bias.len() * x.len() {
        return Err(Error::ShapeMismatch(format!("dense weights {} do not match {} × {}", weights.len(), bias.len(), x.len())));
    }
    let mut y = vec![0.0; bias.len()];
    dense_forward_into(x, weights, bias, &mut y);
    Ok(y)
}

pub(crate) fn dense_forward_into(x: &[f64], weights: &[f64], bias: &[f64], y: &mut [f64]) {
    let n_in = x.len();
    for (o, (yo, &b)) in y.iter_mut().zip(bias).enumerate() {
        let w = &weights[o * n_in..(o + 1) * n_in];
        let mut s = b;
        for (a, c) in x.iter().zip(w) {
            s += a * c;
        }
        *yo = s;
    }
}

/// Accumulates `dW += d_y xᵀ`, `db += d_y`, and writes `d_x = Wᵀ d_y` when given.
pub(crate) fn dense_backward(
    x: &[f64],
    weights: &[f64],
    d_y: &[f64],
    d_weights: &mut [f64],
    d_bias: &mut [f64],
    d_x: Option<&mut [f64]>,
) {
    let n_in = x.len();
    for (o, &g) in d_y.iter().enumerate() {
        d_bias[o] += g;
        if g == 0.0 {
            continue;
        }
        let dw = &mut d_weights[o * n_in..(o + 1) * n_in];
        for (d, &xv) in dw.iter_mut().zip(x) {
            *d += g * xv;
        }
    }
    if let Some(dx) = d_x {
        dx.iter_mut().for_each(|v| *v = 0.0);
        for (o, &g) in d_y.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let w = &weights[o * n_in..(o + 1) * n_in];
            for (d, &wv) in dx.iter_mut().zip(w) {
                *d += g * wv;
            }
        }
    }
}

pub fn relu_in_place(x: &mut [f64]) {
    x.iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0
        }
    });
}

/// Inverted dropout mask: each entry is 0 with probability `rate`, else
/// `1 / (1 − rate)`.
pub fn dropout_mask(n: usize, rate: f64, rng: &mut PipelineRng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..n).map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }).collect()
}

/// Inverted dropout. Identity when not training or when `rate` is 0.
pub fn dropout(x: &[f64], rate: f64, training: bool, rng: &mut PipelineRng) -> Vec<f64> {
    if !training || rate == 0.0 {
        return x.to_vec();
    }
    let mask = dropout_mask(x.len(), rate, rng);
    x.iter().zip(&mask).map(|(a, m)| a * m).collect()
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| libm::exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of softmax(logits) against `label`, and its gradient
/// `softmax − onehot`.
pub fn softmax_xent(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&z| libm::exp(z - max)).sum();
    let log_z = max + libm::log(sum);
    let loss = log_z - logits[label];
    let grad = logits
        .iter()
        .enumerate()
        .map(|(k, &z)| libm::exp(z - log_z) - if k == label { 1.0 } else { 0.0 })
        .collect();
    (loss, grad)
}
