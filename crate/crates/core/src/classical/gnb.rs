use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{argmax, check_xy, class_counts};
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Gaussian naive Bayes.
///
/// Variances are smoothed per feature by `var_smoothing × var(feature)`
/// (over all training rows), or by `var_smoothing` itself for a constant
/// feature, which keeps predictions invariant under per-feature rescaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    pub class_priors: Vec<f64>,
    pub means: Matrix,
    pub variances: Matrix,
    pub var_smoothing: f64,
}

pub fn train_gnb(x: &Matrix, y: &[usize], n_classes: usize, var_smoothing: f64) -> Result<GnbModel> {
    check_xy(x, y)?;
    if !(var_smoothing > 0.0) {
        return Err(Error::InvalidParameter("var_smoothing must be positive".into()));
    }
    let counts = class_counts(y, n_classes);
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::MissingClass(missing));
    }
    let d = x.cols();
    let mut means = Matrix::zeros(n_classes, d);
    for (r, &c) in x.row_iter().zip(y) {
        for (m, &v) in means.row_mut(c).iter_mut().zip(r) {
            *m += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        means.row_mut(c).iter_mut().for_each(|m| *m /= count as f64);
    }
    let mut variances = Matrix::zeros(n_classes, d);
    for (r, &c) in x.row_iter().zip(y) {
        for j in 0..d {
            let dv = r[j] - means[(c, j)];
            variances[(c, j)] += dv * dv;
        }
    }

    let overall_mean = x.column_means();
    let mut overall_var = alloc::vec![0.0; d];
    for r in x.row_iter() {
        for j in 0..d {
            overall_var[j] += (r[j] - overall_mean[j]) * (r[j] - overall_mean[j]);
        }
    }
    let eps: Vec<f64> = overall_var
        .iter()
        .map(|v| {
            let v = v / x.rows() as f64;
            if v > 0.0 {
                var_smoothing * v
            } else {
                var_smoothing
            }
        })
        .collect();
    for (c, &count) in counts.iter().enumerate() {
        for j in 0..d {
            variances[(c, j)] = variances[(c, j)] / count as f64 + eps[j];
        }
    }
    let total = y.len() as f64;
    let class_priors = counts.iter().map(|&c| c as f64 / total).collect();
    Ok(GnbModel { class_priors, means, variances, var_smoothing })
}

impl GnbModel {
    /// Unnormalized log posterior of each class.
    pub fn joint_log_likelihood(&self, row: &[f64]) -> Vec<f64> {
        let ln_2pi = libm::log(2.0 * core::f64::consts::PI);
        (0..self.class_priors.len())
            .map(|c| {
                let mut s = libm::log(self.class_priors[c]);
                for (j, &v) in row.iter().enumerate() {
                    let var = self.variances[(c, j)];
                    let dv = v - self.means[(c, j)];
                    s -= 0.5 * (ln_2pi + libm::log(var)) + dv * dv / (2.0 * var);
                }
                s
            })
            .collect()
    }
}

pub fn predict_gnb(model: &GnbModel, x: &Matrix) -> Vec<usize> {
    x.row_iter().map(|r| argmax(&model.joint_log_likelihood(r))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn nearer_class_wins() {
        let x = Matrix::from_rows(&[vec![-2.1], vec![-1.9], vec![-2.0], vec![2.1], vec![1.9], vec![2.0]]);
        let y = [0, 0, 0, 1, 1, 1];
        let m = train_gnb(&x, &y, 2, 1e-9).unwrap();
        assert_eq!(predict_gnb(&m, &Matrix::from_rows(&[vec![-0.01], vec![0.01]])), vec![0, 1]);
        assert!((m.class_priors.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_feature_is_finite() {
        let x = Matrix::from_rows(&[vec![1.0, 3.0], vec![1.0, 2.0], vec![1.0, 9.0], vec![1.0, 8.0]]);
        let m = train_gnb(&x, &[0, 0, 1, 1], 2, 1e-9).unwrap();
        assert!(m.variances.as_slice().iter().all(|v| *v > 0.0));
        let jll = m.joint_log_likelihood(&[1.0, 5.0]);
        assert!(jll.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn missing_class() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]);
        assert_eq!(train_gnb(&x, &[0, 0], 2, 1e-9), Err(Error::MissingClass(1)));
        assert_eq!(train_gnb(&Matrix::zeros(0, 1), &[], 2, 1e-9), Err(Error::EmptyInput));
    }
}
