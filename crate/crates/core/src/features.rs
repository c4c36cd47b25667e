//! Time-domain EMG features (ZC, MAV, SD, MAD) and the column scaler.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::windowing::{WindowMeta, WindowTensor};
use crate::{Error, Result, CHANNEL_NAMES, N_CHANNELS};

/// Features per channel, in column order.
pub const FEATURE_KINDS: [&str; 4] = ["ZC", "MAV", "SD", "MAD"];
pub const N_FEATURES: usize = FEATURE_KINDS.len() * N_CHANNELS;
/// ZC threshold as a fraction of the channel's mean absolute value.
pub const ZC_THRESHOLD_FRACTION: f64 = 0.03;

/// Thresholded sign-change count: pairs with `x_i · x_{i+1} < 0` and
/// `|x_i − x_{i+1}| ≥ theta`.
pub fn zc(w: &[f64], theta: f64) -> usize {
    w.windows(2).filter(|p| p[0] * p[1] < 0.0 && (p[0] - p[1]).abs() >= theta).count()
}

/// The printed formula `½ Σ sgn(x_i·x_{i+1}) · u(|x_i − x_{i+1}| − θ)` taken
/// literally, with `u(0) = 1` and `sgn(0) = 0`. Can be negative.
pub fn zc_literal(w: &[f64], theta: f64) -> f64 {
    let sum: f64 = w
        .windows(2)
        .map(|p| {
            let prod = p[0] * p[1];
            let sgn = if prod > 0.0 {
                1.0
            } else if prod < 0.0 {
                -1.0
            } else {
                0.0
            };
            let step = if (p[0] - p[1]).abs() - theta >= 0.0 { 1.0 } else { 0.0 };
            sgn * step
        })
        .sum();
    0.5 * sum
}

pub fn mav(w: &[f64]) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    w.iter().map(|v| v.abs()).sum::<f64>() / w.len() as f64
}

/// Population standard deviation.
pub fn std_dev(w: &[f64]) -> f64 {
    crate::dsp::population_std(w)
}

/// Mean absolute deviation about the mean.
pub fn mad(w: &[f64]) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    let m = crate::dsp::mean(w);
    w.iter().map(|v| (v - m).abs()).sum::<f64>() / w.len() as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZcMode {
    #[default]
    Count,
    Literal,
}

/// Per-channel ZC thresholds of one recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZcThresholds {
    pub theta: [f64; N_CHANNELS],
}

pub fn compute_thresholds(signals: &[Vec<f64>; N_CHANNELS]) -> ZcThresholds {
    ZcThresholds { theta: core::array::from_fn(|c| ZC_THRESHOLD_FRACTION * mav(&signals[c])) }
}

pub fn feature_names() -> Vec<String> {
    CHANNEL_NAMES.iter().flat_map(|c| FEATURE_KINDS.iter().map(move |f| format!("{c}_{f}"))).collect()
}

/// `N × 20` feature rows with the window metadata carried along.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub x: Matrix,
    pub feature_names: Vec<String>,
    pub meta: WindowMeta,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self { x: self.x.select_rows(rows), feature_names: self.feature_names.clone(), meta: self.meta.select(rows) }
    }
}

/// Features of every window; `thresholds[r]` applies to windows whose
/// `recording_index` is `r`.
pub fn extract_features(tensor: &WindowTensor, thresholds: &[ZcThresholds], mode: ZcMode) -> Result<FeatureMatrix> {
    let n = tensor.len();
    let mut x = Matrix::zeros(n, N_FEATURES);
    let mut buf = Vec::with_capacity(tensor.window_len);
    for i in 0..n {
        let rec = tensor.meta.recording_index[i] as usize;
        let th = thresholds
            .get(rec)
            .ok_or_else(|| Error::ShapeMismatch(format!("no ZC thresholds for recording {rec}")))?;
        let row = x.row_mut(i);
        for c in 0..N_CHANNELS {
            tensor.channel_into(i, c, &mut buf);
            let zc_value = match mode {
                ZcMode::Count => zc(&buf, th.theta[c]) as f64,
                ZcMode::Literal => zc_literal(&buf, th.theta[c]),
            };
            let base = 4 * c;
            row[base] = zc_value;
            row[base + 1] = mav(&buf);
            row[base + 2] = std_dev(&buf);
            row[base + 3] = mad(&buf);
        }
    }
    Ok(FeatureMatrix { x, feature_names: feature_names(), meta: tensor.meta.clone() })
}

/// Column standardizer fitted on training rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub fitted: bool,
}

impl FeatureScaler {
    pub fn fit(x: &Matrix) -> Self {
        let means = x.column_means();
        let mut var = vec![0.0; x.cols()];
        for r in x.row_iter() {
            for ((v, &xv), &m) in var.iter_mut().zip(r).zip(&means) {
                *v += (xv - m) * (xv - m);
            }
        }
        let n = x.rows().max(1) as f64;
        let stds = var.into_iter().map(|v| libm::sqrt(v / n)).collect();
        Self { means, stds, fitted: true }
    }

    /// `(x − mean) / std` per column; zero-variance columns map to 0.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if !self.fitted {
            return Err(Error::NotFitted);
        }
        if x.cols() != self.means.len() {
            return Err(Error::ShapeMismatch(format!("scaler fitted on {} columns, got {}", self.means.len(), x.cols())));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, &m), &s) in out.row_mut(r).iter_mut().zip(&self.means).zip(&self.stds) {
                *v = if s > 0.0 { (*v - m) / s } else { 0.0 };
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::PhaseLabel;

    fn alternating(n: usize) -> Vec<f64> {
        (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect()
    }

    #[test]
    fn zc_examples() {
        assert_eq!(zc(&alternating(40), 0.0), 39);
        assert_eq!(zc(&[0.5; 40], 0.0), 0);
        assert_eq!(zc(&alternating(40), 3.0), 0);
        assert_eq!(zc(&alternating(40), 2.0), 39);
        // touching zero is not a crossing
        assert_eq!(zc(&[1.0, 0.0, -1.0], 0.0), 0);
    }

    #[test]
    fn zc_literal_can_go_negative() {
        assert_eq!(zc_literal(&alternating(40), 0.0), -19.5);
        assert_eq!(zc_literal(&[1.0, 2.0, 3.0], 0.0), 1.0);
    }

    #[test]
    fn moment_features() {
        assert_eq!(mav(&[0.0; 40]), 0.0);
        assert_eq!(mav(&[-2.0, 2.0]), 2.0);
        assert_eq!(std_dev(&[3.0; 40]), 0.0);
        assert_eq!(std_dev(&[0.0, 2.0]), 1.0);
        assert_eq!(mad(&[3.0; 40]), 0.0);
        assert_eq!(mad(&[0.0, 2.0]), 1.0);
    }

    #[test]
    fn thresholds() {
        let sig: [Vec<f64>; 5] = core::array::from_fn(|c| if c == 0 { alternating(100) } else { vec![0.0; 100] });
        let th = compute_thresholds(&sig);
        assert!((th.theta[0] - 0.03).abs() < 1e-15);
        assert_eq!(th.theta[1], 0.0);
    }

    #[test]
    fn zero_tensor_gives_zero_row() {
        let mut t = WindowTensor::empty(40, 16);
        t.data = vec![0.0; 200];
        t.meta.labels.push(PhaseLabel::Stance);
        t.meta.subjects.push("a".into());
        t.meta.subject_index.push(0);
        t.meta.recording_index.push(0);
        let f = extract_features(&t, &[ZcThresholds { theta: [0.0; 5] }], ZcMode::Count).unwrap();
        assert_eq!(f.x.rows(), 1);
        assert_eq!(f.x.cols(), 20);
        assert!(f.x.as_slice().iter().all(|v| *v == 0.0));
        assert_eq!(f.feature_names[0], "VL_ZC");
        assert_eq!(f.feature_names[19], "GM_MAD");
        assert!(extract_features(&t, &[], ZcMode::Count).is_err());
    }

    #[test]
    fn scaler() {
        let x = Matrix::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]]);
        assert_eq!(FeatureScaler::default().apply(&x), Err(Error::NotFitted));
        let s = FeatureScaler::fit(&x);
        let y = s.apply(&x).unwrap();
        let col0: Vec<f64> = (0..3).map(|i| y[(i, 0)]).collect();
        assert!(crate::dsp::mean(&col0).abs() < 1e-12);
        assert!((crate::dsp::population_std(&col0) - 1.0).abs() < 1e-12);
        assert!((0..3).all(|i| y[(i, 1)] == 0.0));
        let held = Matrix::from_rows(&[vec![100.0, -3.0]]);
        let z = s.apply(&held).unwrap();
        assert!(z.as_slice().iter().all(|v| v.is_finite()));
    }
}
