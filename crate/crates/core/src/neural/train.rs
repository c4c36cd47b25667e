//! Mini-batch training with early stopping on validation loss.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::model::{BatchStats, BestModelSelection, DcnnModel, Params, Workspace};
use crate::rng::{derive_seed, rng_from_seed};
use crate::windowing::WindowTensor;
use crate::{Error, Result};

/// Stops once `patience` consecutive epochs pass without a strictly lower
/// validation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best_loss: f64,
    pub best_epoch: Option<usize>,
    pub since_improvement: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best_loss: f64::INFINITY, best_epoch: None, since_improvement: 0 }
    }

    /// Records one epoch and returns true when training should stop.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        if val_loss < self.best_loss {
            self.best_loss = val_loss;
            self.best_epoch = Some(epoch);
            self.since_improvement = 0;
        } else {
            self.since_improvement += 1;
        }
        self.since_improvement >= self.patience
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were returned.
    pub best_epoch: usize,
    /// Epoch with the lowest validation loss.
    pub best_val_epoch: usize,
    /// Last epoch that ran.
    pub stopped_epoch: usize,
    pub selection: BestModelSelection,
    pub early_stopped: bool,
}

/// Labelled windows as a flat buffer.
#[derive(Debug, Clone, Copy)]
pub struct DcnnData<'a> {
    pub x: &'a [f64],
    pub y: &'a [usize],
}

impl<'a> DcnnData<'a> {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Owned labels for a tensor, so it can be viewed as [`DcnnData`].
pub fn tensor_labels(t: &WindowTensor) -> Vec<usize> {
    t.meta.label_indices()
}

/// Trains `model` in place of a copy and returns the weights from the
/// selected epoch. Shuffling and dropout draw from streams derived from
/// `seed`. With [`BestModelSelection::TestAccuracy`] and no test data the
/// validation accuracy is used.
pub fn train_dcnn(
    model: &DcnnModel,
    train: DcnnData<'_>,
    val: DcnnData<'_>,
    test: Option<DcnnData<'_>>,
    seed: u64,
) -> Result<(DcnnModel, TrainHistory)> {
    let cfg = &model.config;
    let w = model.input_len();
    for (name, d) in [("training", Some(train)), ("validation", Some(val)), ("test", test)] {
        let Some(d) = d else { continue };
        if d.x.len() != d.len() * w {
            return Err(Error::ShapeMismatch(format!("{name} data has {} values for {} windows", d.x.len(), d.len())));
        }
        if let Some(&bad) = d.y.iter().find(|&&y| y >= cfg.n_classes) {
            return Err(Error::InvalidParameter(format!("{name} label {bad} out of range")));
        }
    }
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    if val.is_empty() {
        return Err(Error::EmptySplit("validation set is empty".into()));
    }
    let test = test.filter(|t| !t.is_empty());
    let selection = match (cfg.selection, test) {
        (BestModelSelection::TestAccuracy, None) => {
            log::warn!("no test windows; selecting the best epoch by validation accuracy");
            BestModelSelection::ValAccuracy
        }
        (s, _) => s,
    };

    let mut current = model.clone();
    let mut best_params = current.params.clone();
    let mut best_metric = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut adam = Adam::new(&current.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);
    let mut grads: Params = current.params.clone();
    let mut ws = Workspace::new(&current);
    let mut shuffle_rng = rng_from_seed(derive_seed(seed, 0));
    let mut dropout_rng = rng_from_seed(derive_seed(seed, 1));
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut epochs = Vec::new();
    let mut early_stopped = false;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut train_stats = BatchStats::default();
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let inputs: Vec<&[f64]> = batch.iter().map(|&i| &train.x[i * w..(i + 1) * w]).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train.y[i]).collect();
            let stats = current.loss_and_grad(&inputs, &labels, &mut ws, &mut grads, Some(&mut dropout_rng));
            if !grads.all_finite() || !stats.loss_sum.is_finite() {
                return Err(Error::NonFiniteGradient(format!("epoch {epoch}, batch {b}")));
            }
            adam.update(&mut current.params, &grads);
            train_stats.merge(stats);
        }
        let val_stats = current.evaluate(val.x, val.y);
        let test_accuracy = test.map(|t| current.evaluate(t.x, t.y).accuracy());
        let record = EpochRecord {
            epoch,
            train_loss: train_stats.mean_loss(),
            train_accuracy: train_stats.accuracy(),
            val_loss: val_stats.mean_loss(),
            val_accuracy: val_stats.accuracy(),
            test_accuracy,
        };
        log::debug!(
            "epoch {epoch}: loss {:.4} acc {:.3} val_loss {:.4} val_acc {:.3}",
            record.train_loss,
            record.train_accuracy,
            record.val_loss,
            record.val_accuracy
        );
        let metric = match selection {
            BestModelSelection::TestAccuracy => test_accuracy.unwrap_or(record.val_accuracy),
            BestModelSelection::ValAccuracy => record.val_accuracy,
        };
        if metric > best_metric {
            best_metric = metric;
            best_epoch = epoch;
            best_params.clone_from(&current.params);
        }
        let stop = stopper.observe(epoch, record.val_loss);
        epochs.push(record);
        if stop {
            early_stopped = true;
            break;
        }
    }
    current.params = best_params;
    let stopped_epoch = epochs.len() - 1;
    let best_val_epoch = stopper.best_epoch.unwrap_or(0);
    Ok((current, TrainHistory { epochs, best_epoch, best_val_epoch, stopped_epoch, selection, early_stopped }))
}
