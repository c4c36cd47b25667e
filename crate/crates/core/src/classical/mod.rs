//! Classical classifiers trained on feature rows: Gaussian naive Bayes,
//! CART decision tree, random forest and linear discriminant analysis, plus
//! random hyperparameter search.
//!
//! Labels are class indices `0..n_classes`. Every argmax breaks ties toward
//! the lowest class index.

mod forest;
mod gnb;
mod lda;
mod search;
mod tree;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::{Error, Result};

pub use forest::{predict_rf, train_rf, ForestParams, MaxFeatures, RfModel};
pub use gnb::{predict_gnb, train_gnb, GnbModel};
pub use lda::{predict_lda, train_lda, LdaModel};
pub use search::{random_search, FloatLogRange, IntRange, SearchOutcome, SearchSpace};
pub use tree::{best_split, impurity, predict_dt, train_dt, Criterion, DtModel, Node, SplitCandidate, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalKind {
    Nb,
    Dt,
    Rf,
    Lda,
}

impl ClassicalKind {
    pub const ALL: [ClassicalKind; 4] = [ClassicalKind::Nb, ClassicalKind::Dt, ClassicalKind::Rf, ClassicalKind::Lda];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassicalKind::Nb => "nb",
            ClassicalKind::Dt => "dt",
            ClassicalKind::Rf => "rf",
            ClassicalKind::Lda => "lda",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Hyperparams {
    Nb { var_smoothing: f64 },
    Dt(TreeParams),
    Rf(ForestParams),
    Lda { ridge_eps: f64 },
}

impl Hyperparams {
    pub fn kind(&self) -> ClassicalKind {
        match self {
            Hyperparams::Nb { .. } => ClassicalKind::Nb,
            Hyperparams::Dt(_) => ClassicalKind::Dt,
            Hyperparams::Rf(_) => ClassicalKind::Rf,
            Hyperparams::Lda { .. } => ClassicalKind::Lda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ClassicalModel {
    Nb(GnbModel),
    Dt(DtModel),
    Rf(RfModel),
    Lda(LdaModel),
}

impl ClassicalModel {
    pub fn train(params: &Hyperparams, x: &Matrix, y: &[usize], n_classes: usize, seed: u64) -> Result<Self> {
        Ok(match params {
            Hyperparams::Nb { var_smoothing } => ClassicalModel::Nb(train_gnb(x, y, n_classes, *var_smoothing)?),
            Hyperparams::Dt(p) => ClassicalModel::Dt(train_dt(x, y, n_classes, p, seed)?),
            Hyperparams::Rf(p) => ClassicalModel::Rf(train_rf(x, y, n_classes, p, seed)?),
            Hyperparams::Lda { ridge_eps } => ClassicalModel::Lda(train_lda(x, y, n_classes, *ridge_eps)?),
        })
    }

    pub fn predict(&self, x: &Matrix) -> Vec<usize> {
        match self {
            ClassicalModel::Nb(m) => predict_gnb(m, x),
            ClassicalModel::Dt(m) => predict_dt(m, x),
            ClassicalModel::Rf(m) => predict_rf(m, x),
            ClassicalModel::Lda(m) => predict_lda(m, x),
        }
    }

    pub fn kind(&self) -> ClassicalKind {
        match self {
            ClassicalModel::Nb(_) => ClassicalKind::Nb,
            ClassicalModel::Dt(_) => ClassicalKind::Dt,
            ClassicalModel::Rf(_) => ClassicalKind::Rf,
            ClassicalModel::Lda(_) => ClassicalKind::Lda,
        }
    }
}

/// Index of the largest score; the first one wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// `max(y) + 1`, or 0 for empty input.
pub fn n_classes_of(y: &[usize]) -> usize {
    y.iter().max().map_or(0, |m| m + 1)
}

fn check_xy(x: &Matrix, y: &[usize]) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    if x.rows() != y.len() {
        return Err(Error::ShapeMismatch(alloc::format!("{} rows but {} labels", x.rows(), y.len())));
    }
    Ok(())
}

fn class_counts(y: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = alloc::vec![0; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    counts
}

/// Most populated class, first one on ties.
fn argmax_counts(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}
