//! Principal component analysis of feature rows.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// Fitted PCA: components are rows, sorted by eigenvalue descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Matrix,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

/// Eigendecomposition of the sample covariance (divisor `N − 1`).
///
/// Each component is sign-normalized so that its largest-magnitude entry
/// (first one on ties) is positive.
pub fn fit_pca(x: &Matrix) -> Result<PcaModel> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::DegenerateInput(format!("PCA needs at least 2 rows, got {n}")));
    }
    if d == 0 {
        return Err(Error::DegenerateInput("PCA needs at least one column".into()));
    }
    let mean = x.column_means();
    let mut cov = Matrix::zeros(d, d);
    let mut centered = alloc::vec![0.0; d];
    for r in x.row_iter() {
        for ((c, &v), &m) in centered.iter_mut().zip(r).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                cov[(i, j)] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let eig = linalg::symmetric_eigen(&cov);
    let mut components = eig.vectors;
    for k in 0..d {
        let row = components.row_mut(k);
        let mut pivot = 0;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[pivot].abs() {
                pivot = j;
            }
        }
        if row[pivot] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let eigenvalues: Vec<f64> = eig.values.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    let explained_variance_ratio =
        eigenvalues.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect();
    Ok(PcaModel { mean, components, eigenvalues, explained_variance_ratio })
}

impl PcaModel {
    pub fn k_max(&self) -> usize {
        self.components.rows()
    }

    /// `(x − mean) · componentsᵀ` keeping the first `k` columns.
    pub fn transform(&self, x: &Matrix, k: usize) -> Result<Matrix> {
        if k == 0 || k > self.k_max() {
            return Err(Error::BadK { k, k_max: self.k_max() });
        }
        if x.cols() != self.mean.len() {
            return Err(Error::ShapeMismatch(format!("PCA fitted on {} columns, got {}", self.mean.len(), x.cols())));
        }
        let mut out = Matrix::zeros(x.rows(), k);
        let mut centered = alloc::vec![0.0; x.cols()];
        for (i, r) in x.row_iter().enumerate() {
            for ((c, &v), &m) in centered.iter_mut().zip(r).zip(&self.mean) {
                *c = v - m;
            }
            for j in 0..k {
                out[(i, j)] = linalg::dot(&centered, self.components.row(j));
            }
        }
        Ok(out)
    }

    /// Maps `k`-dimensional scores back to feature space.
    pub fn inverse_transform(&self, scores: &Matrix) -> Result<Matrix> {
        let k = scores.cols();
        if k == 0 || k > self.k_max() {
            return Err(Error::BadK { k, k_max: self.k_max() });
        }
        let d = self.mean.len();
        let mut out = Matrix::zeros(scores.rows(), d);
        for (i, s) in scores.row_iter().enumerate() {
            let row = out.row_mut(i);
            row.copy_from_slice(&self.mean);
            for (j, &sj) in s.iter().enumerate() {
                for (o, &c) in row.iter_mut().zip(self.components.row(j)) {
                    *o += sj * c;
                }
            }
        }
        Ok(out)
    }

    pub fn explained_variance_ratio(&self) -> &[f64] {
        &self.explained_variance_ratio
    }

    pub fn cumulative_ratio(&self, k: usize) -> f64 {
        self.explained_variance_ratio.iter().take(k).sum()
    }
}
