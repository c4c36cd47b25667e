//! CART classification tree.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmax_counts, check_xy, class_counts};
use crate::linalg::Matrix;
use crate::rng::PipelineRng;
use crate::{Error, Result};

/// Splits within this margin of the best impurity count as ties.
const IMPURITY_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    #[serde(default)]
    pub criterion: Criterion,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: 16, min_samples_split: 2, min_samples_leaf: 1, criterion: Criterion::Gini }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf { class_counts: Vec<usize> },
    Split { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    fn predict(&self, row: &[f64]) -> usize {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { class_counts } => return argmax_counts(class_counts),
                Node::Split { feature, threshold, left, right } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtModel {
    pub root: Node,
    pub params: TreeParams,
    pub n_classes: usize,
    pub n_features: usize,
}

/// Impurity of a class histogram.
pub fn impurity(counts: &[usize], criterion: Criterion) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    match criterion {
        Criterion::Gini => 1.0 - counts.iter().map(|&c| (c as f64 / n) * (c as f64 / n)).sum::<f64>(),
        Criterion::Entropy => counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * libm::log2(p)
            })
            .sum(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted child impurity `(n_L·I_L + n_R·I_R) / n`.
    pub impurity: f64,
}

/// Best split of the rows `indices` over `features` (ascending), with
/// thresholds at midpoints of consecutive distinct values. Ties go to the
/// lower feature index, then the lower threshold.
pub fn best_split(
    x: &Matrix,
    y: &[usize],
    indices: &[usize],
    features: &[usize],
    n_classes: usize,
    min_samples_leaf: usize,
    criterion: Criterion,
) -> Option<SplitCandidate> {
    let n = indices.len();
    let total = class_counts_of(y, indices, n_classes);
    let mut best: Option<SplitCandidate> = None;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut left = vec![0usize; n_classes];
    let mut right = vec![0usize; n_classes];
    let min_leaf = min_samples_leaf.max(1);
    for &f in features {
        order.clear();
        order.extend(indices.iter().map(|&i| (x[(i, f)], y[i])));
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        left.iter_mut().for_each(|c| *c = 0);
        right.copy_from_slice(&total);
        for i in 0..n - 1 {
            let (v, c) = order[i];
            left[c] += 1;
            right[c] -= 1;
            let next = order[i + 1].0;
            if !(v < next) {
                continue;
            }
            let n_left = i + 1;
            if n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let imp = (n_left as f64 * impurity(&left, criterion) + (n - n_left) as f64 * impurity(&right, criterion))
                / n as f64;
            if best.is_none_or(|b| imp < b.impurity - IMPURITY_TIE) {
                let mut threshold = v + (next - v) / 2.0;
                if threshold >= next {
                    threshold = v;
                }
                best = Some(SplitCandidate { feature: f, threshold, impurity: imp });
            }
        }
    }
    best
}

fn class_counts_of(y: &[usize], indices: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &i in indices {
        counts[y[i]] += 1;
    }
    counts
}

/// Per-split feature subsampling for forests.
pub(crate) struct FeatureSampler<'a> {
    pub max_features: usize,
    pub rng: &'a mut PipelineRng,
}

pub(crate) fn grow(
    x: &Matrix,
    y: &[usize],
    indices: Vec<usize>,
    n_classes: usize,
    params: &TreeParams,
    depth: usize,
    sampler: &mut Option<FeatureSampler<'_>>,
) -> Node {
    let counts = class_counts_of(y, &indices, n_classes);
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= params.max_depth || indices.len() < params.min_samples_split.max(2) {
        return Node::Leaf { class_counts: counts };
    }
    let d = x.cols();
    let features: Vec<usize> = match sampler {
        Some(s) if s.max_features < d => {
            let mut pool: Vec<usize> = (0..d).collect();
            for k in 0..s.max_features {
                let j = s.rng.random_range(k..d);
                pool.swap(k, j);
            }
            let mut chosen = pool[..s.max_features].to_vec();
            chosen.sort_unstable();
            chosen
        }
        _ => (0..d).collect(),
    };
    let Some(split) = best_split(x, y, &indices, &features, n_classes, params.min_samples_leaf, params.criterion) else {
        return Node::Leaf { class_counts: counts };
    };
    let (li, ri): (Vec<usize>, Vec<usize>) = indices.iter().partition(|&&i| x[(i, split.feature)] <= split.threshold);
    drop(indices);
    let left = grow(x, y, li, n_classes, params, depth + 1, sampler);
    let right = grow(x, y, ri, n_classes, params, depth + 1, sampler);
    Node::Split { feature: split.feature, threshold: split.threshold, left: Box::new(left), right: Box::new(right) }
}

/// Greedy CART on all features. `seed` is accepted for interface symmetry
/// with the forest; a plain tree consumes no randomness.
pub fn train_dt(x: &Matrix, y: &[usize], n_classes: usize, params: &TreeParams, _seed: u64) -> Result<DtModel> {
    check_xy(x, y)?;
    if params.max_depth == 0 {
        return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
    }
    debug_assert!(class_counts(y, n_classes).len() == n_classes);
    let root = grow(x, y, (0..x.rows()).collect(), n_classes, params, 0, &mut None);
    Ok(DtModel { root, params: *params, n_classes, n_features: x.cols() })
}

pub fn predict_dt(model: &DtModel, x: &Matrix) -> Vec<usize> {
    x.row_iter().map(|r| model.root.predict(r)).collect()
}

impl DtModel {
    pub(crate) fn predict_row(&self, row: &[f64]) -> usize {
        self.root.predict(row)
    }
}
