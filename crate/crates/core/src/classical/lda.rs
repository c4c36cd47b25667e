use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{argmax, check_xy, class_counts};
use crate::linalg::{self, Matrix};
use crate::{Error, Result};

/// Linear discriminant analysis with a pooled within-class covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub class_means: Matrix,
    pub pooled_covariance_inverse: Matrix,
    pub priors: Vec<f64>,
    /// Rows `Σ⁻¹ μ_k`.
    pub coef: Matrix,
    /// `−½ μ_kᵀ Σ⁻¹ μ_k + ln π_k`.
    pub intercept: Vec<f64>,
    pub ridge_eps: f64,
}

pub fn train_lda(x: &Matrix, y: &[usize], n_classes: usize, ridge_eps: f64) -> Result<LdaModel> {
    check_xy(x, y)?;
    if n_classes < 2 {
        return Err(Error::DegenerateInput("LDA needs at least two classes".into()));
    }
    if !(ridge_eps >= 0.0) {
        return Err(Error::InvalidParameter("ridge_eps must be non-negative".into()));
    }
    let counts = class_counts(y, n_classes);
    if let Some(c) = counts.iter().position(|&n| n < 2) {
        return Err(Error::DegenerateInput(format!("class {c} has {} samples, LDA needs 2", counts[c])));
    }
    let d = x.cols();
    let mut means = Matrix::zeros(n_classes, d);
    for (r, &c) in x.row_iter().zip(y) {
        for (m, &v) in means.row_mut(c).iter_mut().zip(r) {
            *m += v;
        }
    }
    for (c, &n) in counts.iter().enumerate() {
        means.row_mut(c).iter_mut().for_each(|m| *m /= n as f64);
    }

    let mut cov = Matrix::zeros(d, d);
    let mut dev = alloc::vec![0.0; d];
    for (r, &c) in x.row_iter().zip(y) {
        for j in 0..d {
            dev[j] = r[j] - means[(c, j)];
        }
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += dev[i] * dev[j];
            }
        }
    }
    let dof = (y.len() - n_classes).max(1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / dof + if i == j { ridge_eps } else { 0.0 };
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let inv = linalg::spd_inverse(&cov).ok_or(Error::SingularCovariance)?;

    let total = y.len() as f64;
    let priors: Vec<f64> = counts.iter().map(|&n| n as f64 / total).collect();
    let mut coef = Matrix::zeros(n_classes, d);
    let mut intercept = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let w = inv.matvec(means.row(c));
        intercept.push(-0.5 * linalg::dot(means.row(c), &w) + libm::log(priors[c]));
        coef.row_mut(c).copy_from_slice(&w);
    }
    Ok(LdaModel { class_means: means, pooled_covariance_inverse: inv, priors, coef, intercept, ridge_eps })
}

impl LdaModel {
    pub fn decision_function(&self, row: &[f64]) -> Vec<f64> {
        self.coef.row_iter().zip(&self.intercept).map(|(w, b)| linalg::dot(row, w) + b).collect()
    }
}

pub fn predict_lda(model: &LdaModel, x: &Matrix) -> Vec<usize> {
    x.row_iter().map(|r| argmax(&model.decision_function(r))).collect()
}
