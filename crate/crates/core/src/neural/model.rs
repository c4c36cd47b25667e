//! Two-block convolutional classifier over raw EMG windows.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    conv1d_backward, conv1d_forward_into, dense_backward, dense_forward_into, dropout_mask, maxpool1d_backward,
    maxpool1d_into, softmax_xent, ConvShape,
};
use crate::rng::{rng_from_seed, PipelineRng};
use crate::{Error, Result, N_CHANNELS};

/// Which epoch's weights are kept at the end of training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BestModelSelection {
    TestAccuracy,
    ValAccuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DcnnConfig {
    pub window_len: usize,
    pub channels: usize,
    pub conv1_filters: usize,
    pub conv1_kernel: usize,
    pub conv2_filters: usize,
    pub conv2_kernel: usize,
    pub pool: usize,
    pub dense1_units: usize,
    pub dense2_units: usize,
    pub dropout: f64,
    pub n_classes: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub selection: BestModelSelection,
}

impl Default for DcnnConfig {
    fn default() -> Self {
        Self {
            window_len: crate::windowing::WINDOW_LEN,
            channels: N_CHANNELS,
            conv1_filters: 32,
            conv1_kernel: 5,
            conv2_filters: 64,
            conv2_kernel: 3,
            pool: 2,
            dense1_units: 100,
            dense2_units: 50,
            dropout: 0.3,
            n_classes: 2,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 256,
            max_epochs: 1000,
            patience: 100,
            selection: BestModelSelection::TestAccuracy,
        }
    }
}

/// Derived activation sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub conv1: ConvShape,
    pub pool1_len: usize,
    pub conv2: ConvShape,
    pub pool2_len: usize,
    pub flat: usize,
}

impl DcnnConfig {
    pub fn validate(&self) -> Result<Dims> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.window_len == 0 || self.channels == 0 || self.conv1_filters == 0 || self.conv2_filters == 0 {
            return bad("layer sizes must be positive".into());
        }
        if self.dense1_units == 0 || self.dense2_units == 0 || self.n_classes < 2 || self.pool == 0 {
            return bad("dense sizes and pool must be positive and n_classes at least 2".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.adam_eps > 0.0) {
            return bad("invalid optimizer settings".into());
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("batch_size, max_epochs and patience must be positive".into());
        }
        if self.conv1_kernel == 0 || self.conv1_kernel > self.window_len {
            return bad(format!("conv1 kernel {} does not fit window {}", self.conv1_kernel, self.window_len));
        }
        let conv1 = ConvShape { len: self.window_len, channels: self.channels, filters: self.conv1_filters, kernel: self.conv1_kernel };
        let pool1_len = conv1.out_len() / self.pool;
        if pool1_len == 0 || self.conv2_kernel == 0 || self.conv2_kernel > pool1_len {
            return bad(format!("conv2 kernel {} does not fit pooled length {pool1_len}", self.conv2_kernel));
        }
        let conv2 = ConvShape { len: pool1_len, channels: self.conv1_filters, filters: self.conv2_filters, kernel: self.conv2_kernel };
        let pool2_len = conv2.out_len() / self.pool;
        if pool2_len == 0 {
            return bad("second pooling leaves no output".into());
        }
        Ok(Dims { conv1, pool1_len, conv2, pool2_len, flat: pool2_len * self.conv2_filters })
    }
}

/// Every trainable tensor. Gradients and optimizer moments share this layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub conv1_w: Vec<f64>,
    pub conv1_b: Vec<f64>,
    pub conv2_w: Vec<f64>,
    pub conv2_b: Vec<f64>,
    pub dense1_w: Vec<f64>,
    pub dense1_b: Vec<f64>,
    pub dense2_w: Vec<f64>,
    pub dense2_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
}

pub const N_TENSORS: usize = 10;
pub const TENSOR_NAMES: [&str; N_TENSORS] =
    ["conv1_w", "conv1_b", "conv2_w", "conv2_b", "dense1_w", "dense1_b", "dense2_w", "dense2_b", "out_w", "out_b"];

impl Params {
    pub fn zeros(config: &DcnnConfig, dims: &Dims) -> Self {
        let sizes = tensor_sizes(config, dims);
        let mut it = sizes.iter().map(|&n| vec![0.0; n]);
        let mut next = || it.next().unwrap_or_default();
        Self {
            conv1_w: next(),
            conv1_b: next(),
            conv2_w: next(),
            conv2_b: next(),
            dense1_w: next(),
            dense1_b: next(),
            dense2_w: next(),
            dense2_b: next(),
            out_w: next(),
            out_b: next(),
        }
    }

    pub fn tensors(&self) -> [&Vec<f64>; N_TENSORS] {
        [
            &self.conv1_w, &self.conv1_b, &self.conv2_w, &self.conv2_b, &self.dense1_w, &self.dense1_b, &self.dense2_w,
            &self.dense2_b, &self.out_w, &self.out_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; N_TENSORS] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.dense1_w,
            &mut self.dense1_b,
            &mut self.dense2_w,
            &mut self.dense2_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = value);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

pub fn tensor_sizes(config: &DcnnConfig, dims: &Dims) -> [usize; N_TENSORS] {
    let c1 = config.conv1_filters;
    let c2 = config.conv2_filters;
    [
        c1 * config.conv1_kernel * config.channels,
        c1,
        c2 * config.conv2_kernel * c1,
        c2,
        config.dense1_units * dims.flat,
        config.dense1_units,
        config.dense2_units * config.dense1_units,
        config.dense2_units,
        config.n_classes * config.dense2_units,
        config.n_classes,
    ]
}

fn fan_ins(config: &DcnnConfig, dims: &Dims) -> [usize; 5] {
    [
        config.conv1_kernel * config.channels,
        config.conv2_kernel * config.conv1_filters,
        dims.flat,
        config.dense1_units,
        config.dense2_units,
    ]
}

/// How dropout behaves during a forward pass.
#[derive(Debug)]
pub enum DropoutMode<'a> {
    Off,
    Sample(&'a mut PipelineRng),
    /// Reuse explicit masks for the two dropout layers.
    Fixed(&'a [f64], &'a [f64]),
}

/// Activations of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    pub conv1: Vec<f64>,
    pub pool1: Vec<f64>,
    pub pool1_arg: Vec<usize>,
    pub conv2: Vec<f64>,
    pub pool2: Vec<f64>,
    pub pool2_arg: Vec<usize>,
    pub dense1: Vec<f64>,
    pub mask1: Vec<f64>,
    pub drop1: Vec<f64>,
    pub dense2: Vec<f64>,
    pub mask2: Vec<f64>,
    pub drop2: Vec<f64>,
    pub logits: Vec<f64>,
}

impl Activations {
    fn new(config: &DcnnConfig, dims: &Dims) -> Self {
        let c1 = dims.conv1.out_len() * config.conv1_filters;
        let p1 = dims.pool1_len * config.conv1_filters;
        let c2 = dims.conv2.out_len() * config.conv2_filters;
        Self {
            conv1: vec![0.0; c1],
            pool1: vec![0.0; p1],
            pool1_arg: vec![0; p1],
            conv2: vec![0.0; c2],
            pool2: vec![0.0; dims.flat],
            pool2_arg: vec![0; dims.flat],
            dense1: vec![0.0; config.dense1_units],
            mask1: vec![1.0; config.dense1_units],
            drop1: vec![0.0; config.dense1_units],
            dense2: vec![0.0; config.dense2_units],
            mask2: vec![1.0; config.dense2_units],
            drop2: vec![0.0; config.dense2_units],
            logits: vec![0.0; config.n_classes],
        }
    }
}

/// Scratch buffers for the backward pass.
#[derive(Debug, Clone)]
struct BackwardScratch {
    d_conv1: Vec<f64>,
    d_pool1: Vec<f64>,
    d_conv2: Vec<f64>,
    d_flat: Vec<f64>,
    d_dense1: Vec<f64>,
    d_dense2: Vec<f64>,
}

/// Reusable per-thread working memory.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub act: Activations,
    scratch: BackwardScratch,
}

impl Workspace {
    pub fn new(model: &DcnnModel) -> Self {
        let act = Activations::new(&model.config, &model.dims);
        let scratch = BackwardScratch {
            d_conv1: vec![0.0; act.conv1.len()],
            d_pool1: vec![0.0; act.pool1.len()],
            d_conv2: vec![0.0; act.conv2.len()],
            d_flat: vec![0.0; act.pool2.len()],
            d_dense1: vec![0.0; act.dense1.len()],
            d_dense2: vec![0.0; act.dense2.len()],
        };
        Self { act, scratch }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcnnModel {
    pub config: DcnnConfig,
    pub dims: Dims,
    pub params: Params,
}

impl DcnnModel {
    /// He-uniform weights, zero biases.
    pub fn new(config: DcnnConfig, seed: u64) -> Result<Self> {
        let dims = config.validate()?;
        let mut params = Params::zeros(&config, &dims);
        let mut rng = rng_from_seed(seed);
        let fans = fan_ins(&config, &dims);
        let weights = [&mut params.conv1_w, &mut params.conv2_w, &mut params.dense1_w, &mut params.dense2_w, &mut params.out_w];
        for (w, fan) in weights.into_iter().zip(fans) {
            let limit = libm::sqrt(6.0 / fan as f64);
            w.iter_mut().for_each(|v| *v = rng.random_range(-limit..limit));
        }
        Ok(Self { config, dims, params })
    }

    pub fn from_params(config: DcnnConfig, params: Params) -> Result<Self> {
        let dims = config.validate()?;
        let sizes = tensor_sizes(&config, &dims);
        for ((t, n), name) in params.tensors().iter().zip(sizes).zip(TENSOR_NAMES) {
            if t.len() != n {
                return Err(Error::ShapeMismatch(format!("{name} has {} values, expected {n}", t.len())));
            }
        }
        Ok(Self { config, dims, params })
    }

    pub fn input_len(&self) -> usize {
        self.config.window_len * self.config.channels
    }

    /// Forward pass for one window stored row-major `window_len × channels`.
    pub fn forward(&self, x: &[f64], ws: &mut Workspace, dropout: DropoutMode<'_>) {
        let p = &self.params;
        let a = &mut ws.act;
        debug_assert_eq!(x.len(), self.input_len());
        conv1d_forward_into(self.dims.conv1, x, &p.conv1_w, &p.conv1_b, &mut a.conv1);
        maxpool1d_into(&a.conv1, self.config.conv1_filters, self.config.pool, &mut a.pool1, &mut a.pool1_arg);
        conv1d_forward_into(self.dims.conv2, &a.pool1, &p.conv2_w, &p.conv2_b, &mut a.conv2);
        maxpool1d_into(&a.conv2, self.config.conv2_filters, self.config.pool, &mut a.pool2, &mut a.pool2_arg);

        dense_forward_into(&a.pool2, &p.dense1_w, &p.dense1_b, &mut a.dense1);
        super::layers::relu_in_place(&mut a.dense1);
        let rate = self.config.dropout;
        let fixed = match dropout {
            DropoutMode::Off => None,
            DropoutMode::Sample(rng) if rate > 0.0 => {
                a.mask1 = dropout_mask(a.dense1.len(), rate, rng);
                a.mask2 = dropout_mask(a.dense2.len(), rate, rng);
                Some(())
            }
            DropoutMode::Sample(_) => None,
            DropoutMode::Fixed(m1, m2) => {
                a.mask1.copy_from_slice(m1);
                a.mask2.copy_from_slice(m2);
                Some(())
            }
        };
        if fixed.is_none() {
            a.mask1.iter_mut().for_each(|m| *m = 1.0);
            a.mask2.iter_mut().for_each(|m| *m = 1.0);
        }
        for ((d, &h), &m) in a.drop1.iter_mut().zip(&a.dense1).zip(&a.mask1) {
            *d = h * m;
        }
        dense_forward_into(&a.drop1, &p.dense2_w, &p.dense2_b, &mut a.dense2);
        super::layers::relu_in_place(&mut a.dense2);
        for ((d, &h), &m) in a.drop2.iter_mut().zip(&a.dense2).zip(&a.mask2) {
            *d = h * m;
        }
        dense_forward_into(&a.drop2, &p.out_w, &p.out_b, &mut a.logits);
    }

    /// Backpropagates `d_logits` through the activations in `ws` and adds the
    /// parameter gradients into `grads`.
    pub fn backward(&self, x: &[f64], ws: &mut Workspace, d_logits: &[f64], grads: &mut Params) {
        let p = &self.params;
        let Workspace { act: a, scratch: s } = ws;

        dense_backward(&a.drop2, &p.out_w, d_logits, &mut grads.out_w, &mut grads.out_b, Some(&mut s.d_dense2));
        for ((d, &m), &h) in s.d_dense2.iter_mut().zip(&a.mask2).zip(&a.dense2) {
            *d = if h > 0.0 { *d * m } else { 0.0 };
        }
        dense_backward(&a.drop1, &p.dense2_w, &s.d_dense2, &mut grads.dense2_w, &mut grads.dense2_b, Some(&mut s.d_dense1));
        for ((d, &m), &h) in s.d_dense1.iter_mut().zip(&a.mask1).zip(&a.dense1) {
            *d = if h > 0.0 { *d * m } else { 0.0 };
        }
        dense_backward(&a.pool2, &p.dense1_w, &s.d_dense1, &mut grads.dense1_w, &mut grads.dense1_b, Some(&mut s.d_flat));

        maxpool1d_backward(&s.d_flat, &a.pool2_arg, &mut s.d_conv2);
        conv1d_backward(
            self.dims.conv2,
            &a.pool1,
            &p.conv2_w,
            &a.conv2,
            &s.d_conv2,
            &mut grads.conv2_w,
            &mut grads.conv2_b,
            Some(&mut s.d_pool1),
        );
        maxpool1d_backward(&s.d_pool1, &a.pool1_arg, &mut s.d_conv1);
        conv1d_backward(self.dims.conv1, x, &p.conv1_w, &a.conv1, &s.d_conv1, &mut grads.conv1_w, &mut grads.conv1_b, None);
    }

    /// Mean cross-entropy over `batch` and its gradient.
    pub fn loss_and_grad(
        &self,
        inputs: &[&[f64]],
        labels: &[usize],
        ws: &mut Workspace,
        grads: &mut Params,
        mut dropout: Option<&mut PipelineRng>,
    ) -> BatchStats {
        grads.fill(0.0);
        let n = inputs.len().max(1) as f64;
        let mut stats = BatchStats::default();
        for (&x, &y) in inputs.iter().zip(labels) {
            let mode = match dropout.as_deref_mut() {
                Some(rng) => DropoutMode::Sample(rng),
                None => DropoutMode::Off,
            };
            self.forward(x, ws, mode);
            let (loss, mut d) = softmax_xent(&ws.act.logits, y);
            stats.loss_sum += loss;
            stats.correct += usize::from(super::argmax(&ws.act.logits) == y);
            stats.count += 1;
            d.iter_mut().for_each(|v| *v /= n);
            self.backward(x, ws, &d, grads);
        }
        stats
    }

    pub fn logits(&self, x: &[f64], ws: &mut Workspace) -> Vec<f64> {
        self.forward(x, ws, DropoutMode::Off);
        ws.act.logits.clone()
    }

    pub fn predict_one(&self, x: &[f64], ws: &mut Workspace) -> usize {
        self.forward(x, ws, DropoutMode::Off);
        super::argmax(&ws.act.logits)
    }

    /// Class predictions for consecutive windows in `data`.
    pub fn predict_batch(&self, data: &[f64]) -> Vec<usize> {
        let mut ws = Workspace::new(self);
        data.chunks_exact(self.input_len()).map(|x| self.predict_one(x, &mut ws)).collect()
    }

    /// Mean loss and accuracy in evaluation mode.
    pub fn evaluate(&self, data: &[f64], labels: &[usize]) -> BatchStats {
        let mut ws = Workspace::new(self);
        let mut stats = BatchStats::default();
        for (x, &y) in data.chunks_exact(self.input_len()).zip(labels) {
            self.forward(x, &mut ws, DropoutMode::Off);
            stats.loss_sum += softmax_xent(&ws.act.logits, y).0;
            stats.correct += usize::from(super::argmax(&ws.act.logits) == y);
            stats.count += 1;
        }
        stats
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatchStats {
    pub loss_sum: f64,
    pub correct: usize,
    pub count: usize,
}

impl BatchStats {
    pub fn merge(&mut self, other: BatchStats) {
        self.loss_sum += other.loss_sum;
        self.correct += other.correct;
        self.count += other.count;
    }

    pub fn mean_loss(&self) -> f64 {
        if self.count == 0 { f64::NAN } else { self.loss_sum / self.count as f64 }
    }

    pub fn accuracy(&self) -> f64 {
        if self.count == 0 { 0.0 } else { self.correct as f64 / self.count as f64 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shapes() {
        let cfg = DcnnConfig::default();
        let dims = cfg.validate().unwrap();
        assert_eq!(dims.conv1.out_len(), 36);
        assert_eq!(dims.pool1_len, 18);
        assert_eq!(dims.conv2.out_len(), 16);
        assert_eq!(dims.pool2_len, 8);
        assert_eq!(dims.flat, 512);
        let m = DcnnModel::new(cfg, 0).unwrap();
        assert_eq!(m.params.n_params(), 800 + 32 + 6144 + 64 + 51_200 + 100 + 5000 + 50 + 100 + 2);
        assert!(m.params.conv1_b.iter().all(|&b| b == 0.0));
        let limit = libm::sqrt(6.0 / 25.0);
        assert!(m.params.conv1_w.iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn rejects_bad_configs() {
        for cfg in [
            DcnnConfig { conv1_kernel: 41, ..Default::default() },
            DcnnConfig { dropout: 1.0, ..Default::default() },
            DcnnConfig { window_len: 8, ..Default::default() },
            DcnnConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(matches!(DcnnModel::new(cfg, 0), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn init_is_seeded() {
        let a = DcnnModel::new(DcnnConfig::default(), 5).unwrap();
        let b = DcnnModel::new(DcnnConfig::default(), 5).unwrap();
        let c = DcnnModel::new(DcnnConfig::default(), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn eval_is_deterministic() {
        let m = DcnnModel::new(DcnnConfig::default(), 1).unwrap();
        let x: Vec<f64> = (0..200).map(|i| libm::sin(i as f64 * 0.37)).collect();
        let mut ws = Workspace::new(&m);
        let a = m.logits(&x, &mut ws);
        let b = m.logits(&x, &mut ws);
        assert_eq!(a, b);
        assert!(a.iter().all(|v| v.is_finite()));
    }
}
