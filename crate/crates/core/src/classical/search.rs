//! Random hyperparameter search scored on a subject-wise inner holdout.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{accuracy, ClassicalKind, ClassicalModel, Criterion, ForestParams, Hyperparams, MaxFeatures, TreeParams};
use crate::linalg::Matrix;
use crate::rng::{derive_seed, rng_from_seed, PipelineRng};
use crate::split::{rows_in, subject_split};
use crate::Result;

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: usize,
    pub hi: usize,
}

impl IntRange {
    pub const fn new(lo: usize, hi: usize) -> Self {
        Self { lo, hi }
    }

    fn sample(self, rng: &mut PipelineRng) -> usize {
        if self.hi <= self.lo {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

/// `10^e` with `e` uniform in `[lo_exp, hi_exp]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloatLogRange {
    pub lo_exp: f64,
    pub hi_exp: f64,
}

impl FloatLogRange {
    pub const fn new(lo_exp: f64, hi_exp: f64) -> Self {
        Self { lo_exp, hi_exp }
    }

    fn sample(self, rng: &mut PipelineRng) -> f64 {
        let e = if self.hi_exp <= self.lo_exp { self.lo_exp } else { rng.random_range(self.lo_exp..=self.hi_exp) };
        libm::pow(10.0, e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub n_iter: usize,
    /// Share of training subjects held out to score candidates.
    pub inner_val_fraction: f64,
    pub max_depth: IntRange,
    pub min_samples_split: IntRange,
    pub min_samples_leaf: IntRange,
    pub criterion: Criterion,
    pub n_trees: IntRange,
    pub max_features: Vec<MaxFeatures>,
    pub bootstrap: bool,
    pub var_smoothing: FloatLogRange,
    pub ridge_eps: FloatLogRange,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            n_iter: 20,
            inner_val_fraction: 0.2,
            max_depth: IntRange::new(2, 32),
            min_samples_split: IntRange::new(2, 64),
            min_samples_leaf: IntRange::new(1, 32),
            criterion: Criterion::Gini,
            n_trees: IntRange::new(10, 200),
            max_features: alloc::vec![MaxFeatures::Sqrt, MaxFeatures::Log2, MaxFeatures::All],
            bootstrap: true,
            var_smoothing: FloatLogRange::new(-12.0, -6.0),
            ridge_eps: FloatLogRange::new(-9.0, -3.0),
        }
    }
}

impl SearchSpace {
    pub fn sample(&self, kind: ClassicalKind, rng: &mut PipelineRng) -> Hyperparams {
        let tree = |rng: &mut PipelineRng| TreeParams {
            max_depth: self.max_depth.sample(rng).max(1),
            min_samples_split: self.min_samples_split.sample(rng).max(2),
            min_samples_leaf: self.min_samples_leaf.sample(rng).max(1),
            criterion: self.criterion,
        };
        match kind {
            ClassicalKind::Nb => Hyperparams::Nb { var_smoothing: self.var_smoothing.sample(rng) },
            ClassicalKind::Lda => Hyperparams::Lda { ridge_eps: self.ridge_eps.sample(rng) },
            ClassicalKind::Dt => Hyperparams::Dt(tree(rng)),
            ClassicalKind::Rf => {
                let tree = tree(rng);
                let n_trees = self.n_trees.sample(rng).max(1);
                let max_features = match self.max_features.len() {
                    0 => MaxFeatures::Sqrt,
                    1 => self.max_features[0],
                    n => self.max_features[rng.random_range(0..n)],
                };
                Hyperparams::Rf(ForestParams { tree, n_trees, max_features, bootstrap: self.bootstrap })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: Hyperparams,
    pub best_score: f64,
    /// Every drawn candidate with its inner-validation accuracy, in draw order.
    /// Candidates that failed to train score -1.
    pub candidates: Vec<(Hyperparams, f64)>,
}

/// Draws `n_iter` configurations, fits each on the inner-training subjects
/// and scores it on the held-out ones. Returns the best; the earliest draw
/// wins ties. With fewer than two distinct groups candidates are scored on
/// the training rows themselves.
pub fn random_search(
    kind: ClassicalKind,
    space: &SearchSpace,
    x: &Matrix,
    y: &[usize],
    groups: &[u32],
    n_classes: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let draws: Vec<Hyperparams> = (0..space.n_iter.max(1)).map(|_| space.sample(kind, &mut rng)).collect();

    let (fit_rows, val_rows): (Vec<usize>, Vec<usize>) =
        match subject_split(groups, space.inner_val_fraction.clamp(1e-9, 1.0 - 1e-9), derive_seed(seed, 1)) {
            Ok(split) => (rows_in(groups, &split.train_subjects), rows_in(groups, &split.test_subjects)),
            Err(_) => {
                log::debug!("inner holdout needs two groups; scoring {kind:?} candidates on training rows");
                ((0..x.rows()).collect(), (0..x.rows()).collect())
            }
        };
    let x_fit = x.select_rows(&fit_rows);
    let y_fit: Vec<usize> = fit_rows.iter().map(|&i| y[i]).collect();
    let x_val = x.select_rows(&val_rows);
    let y_val: Vec<usize> = val_rows.iter().map(|&i| y[i]).collect();

    let mut candidates = Vec::with_capacity(draws.len());
    let mut best = 0;
    for (i, h) in draws.into_iter().enumerate() {
        let score = match ClassicalModel::train(&h, &x_fit, &y_fit, n_classes, derive_seed(seed, 2 + i as u64)) {
            Ok(model) => accuracy(&model.predict(&x_val), &y_val),
            Err(e) => {
                log::debug!("candidate {h:?} failed: {e}");
                -1.0
            }
        };
        if score > candidates.get(best).map_or(f64::NEG_INFINITY, |c: &(Hyperparams, f64)| c.1) {
            best = i;
        }
        candidates.push((h, score));
    }
    let (best_h, best_score) = candidates[best].clone();
    Ok(SearchOutcome { best: best_h, best_score, candidates })
}
