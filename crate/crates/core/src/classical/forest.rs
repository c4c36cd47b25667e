//! Random forest of CART trees with bootstrap sampling and per-split
//! feature subsampling.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, FeatureSampler};
use super::{argmax_counts, check_xy, DtModel, TreeParams};
use crate::linalg::Matrix;
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
    Count(usize),
}

impl MaxFeatures {
    /// Number of features examined per split for `d` features (at least 1).
    pub fn resolve(self, d: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => libm::floor(libm::sqrt(d as f64)) as usize,
            MaxFeatures::Log2 => libm::floor(libm::log2(d as f64)) as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(k) => k,
        };
        m.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub tree: TreeParams,
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { tree: TreeParams::default(), n_trees: 100, max_features: MaxFeatures::Sqrt, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<DtModel>,
    pub params: ForestParams,
    /// Tree `t` was grown from `derive_seed(seed, t)`.
    pub tree_seeds: Vec<u64>,
}

pub fn train_rf(x: &Matrix, y: &[usize], n_classes: usize, params: &ForestParams, seed: u64) -> Result<RfModel> {
    check_xy(x, y)?;
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
    }
    if params.tree.max_depth == 0 {
        return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
    }
    let n = x.rows();
    let max_features = params.max_features.resolve(x.cols());
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut tree_seeds = Vec::with_capacity(params.n_trees);
    for t in 0..params.n_trees {
        let tree_seed = derive_seed(seed, t as u64);
        let mut rng = rng_from_seed(tree_seed);
        let indices: Vec<usize> = if params.bootstrap { (0..n).map(|_| rng.random_range(0..n)).collect() } else { (0..n).collect() };
        let mut sampler = Some(FeatureSampler { max_features, rng: &mut rng });
        let root = grow(x, y, indices, n_classes, &params.tree, 0, &mut sampler);
        trees.push(DtModel { root, params: params.tree, n_classes, n_features: x.cols() });
        tree_seeds.push(tree_seed);
    }
    Ok(RfModel { trees, params: *params, tree_seeds })
}

/// Majority vote over trees, ties to the lowest class.
pub fn predict_rf(model: &RfModel, x: &Matrix) -> Vec<usize> {
    let n_classes = model.trees.first().map_or(0, |t| t.n_classes);
    let mut votes = alloc::vec![0usize; n_classes];
    x.row_iter()
        .map(|r| {
            votes.iter_mut().for_each(|v| *v = 0);
            for t in &model.trees {
                votes[t.predict_row(r)] += 1;
            }
            argmax_counts(&votes)
        })
        .collect()
}
