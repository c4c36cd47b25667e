//! Slow, independent reference implementations used as test oracles.
#![allow(dead_code)]

use emgait_core::linalg::Matrix;
use emgait_core::neural::{layers::softmax_xent, DcnnModel, DropoutMode, Workspace, N_TENSORS, TENSOR_NAMES};

// ---- features ----

pub fn naive_zc(w: &[f64], theta: f64) -> usize {
    let mut count = 0;
    for i in 0..w.len() - 1 {
        let (a, b) = (w[i], w[i + 1]);
        let opposite = (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0);
        let big = if a > b { a - b } else { b - a } >= theta;
        if opposite && big {
            count += 1;
        }
    }
    count
}

pub fn naive_mav(w: &[f64]) -> f64 {
    let mut s = 0.0;
    for &v in w {
        s += if v < 0.0 { -v } else { v };
    }
    s / w.len() as f64
}

pub fn naive_mean(w: &[f64]) -> f64 {
    let mut s = 0.0;
    for &v in w {
        s += v;
    }
    s / w.len() as f64
}

pub fn naive_sd(w: &[f64]) -> f64 {
    let m = naive_mean(w);
    let mut s = 0.0;
    for &v in w {
        s += (v - m) * (v - m);
    }
    (s / w.len() as f64).sqrt()
}

pub fn naive_mad(w: &[f64]) -> f64 {
    let m = naive_mean(w);
    let mut s = 0.0;
    for &v in w {
        s += (v - m).abs();
    }
    s / w.len() as f64
}

// ---- linear algebra ----

/// Cyclic Jacobi eigensolver. Returns eigenvalues descending and the
/// matching unit eigenvectors as rows.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].partial_cmp(&m[i][i]).unwrap());
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

/// Sample covariance with divisor `n − 1`, computed the textbook way.
pub fn naive_covariance(x: &Matrix) -> Vec<Vec<f64>> {
    let (n, d) = (x.rows(), x.cols());
    let means: Vec<f64> = (0..d).map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|a| (0..d).map(|b| (0..n).map(|i| (x[(i, a)] - means[a]) * (x[(i, b)] - means[b])).sum::<f64>() / (n - 1) as f64).collect())
        .collect()
}

// ---- classifiers ----

/// Gaussian class-conditional Bayes decision from densities, with the same
/// variance smoothing the model uses.
pub struct GaussianBayes {
    priors: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
}

impl GaussianBayes {
    pub fn fit(x: &[Vec<f64>], y: &[usize], n_classes: usize, var_smoothing: f64) -> Self {
        let d = x[0].len();
        let n = x.len() as f64;
        let mut overall = vec![0.0; d];
        for j in 0..d {
            let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
            let v = x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            overall[j] = if v > 0.0 { var_smoothing * v } else { var_smoothing };
        }
        let mut priors = vec![];
        let mut means = vec![];
        let mut vars = vec![];
        for c in 0..n_classes {
            let rows: Vec<&Vec<f64>> = x.iter().zip(y).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
            let k = rows.len() as f64;
            priors.push(k / n);
            let mu: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / k).collect();
            let var: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| (r[j] - mu[j]).powi(2)).sum::<f64>() / k + overall[j]).collect();
            means.push(mu);
            vars.push(var);
        }
        Self { priors, means, vars }
    }

    pub fn posterior_unnormalized(&self, row: &[f64]) -> Vec<f64> {
        (0..self.priors.len())
            .map(|c| {
                let mut p = self.priors[c];
                for j in 0..row.len() {
                    let var = self.vars[c][j];
                    p *= (-(row[j] - self.means[c][j]).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
                }
                p
            })
            .collect()
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        let p = self.posterior_unnormalized(row);
        let mut best = 0;
        for c in 1..p.len() {
            if p[c] > p[best] {
                best = c;
            }
        }
        best
    }
}

fn gini(labels: &[usize], n_classes: usize) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let n = labels.len() as f64;
    1.0 - (0..n_classes).map(|c| (labels.iter().filter(|&&l| l == c).count() as f64 / n).powi(2)).sum::<f64>()
}

/// Every feature, every midpoint between distinct sorted values; returns
/// `(feature, threshold, weighted child gini)` of the minimum.
pub fn exhaustive_gini_split(x: &[Vec<f64>], y: &[usize], n_classes: usize) -> Option<(usize, f64, f64)> {
    let n = x.len() as f64;
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let thr = 0.5 * (w[0] + w[1]);
            let left: Vec<usize> = x.iter().zip(y).filter(|(r, _)| r[f] <= thr).map(|(_, &l)| l).collect();
            let right: Vec<usize> = x.iter().zip(y).filter(|(r, _)| r[f] > thr).map(|(_, &l)| l).collect();
            let imp = (left.len() as f64 * gini(&left, n_classes) + right.len() as f64 * gini(&right, n_classes)) / n;
            if best.is_none_or(|b| imp < b.2 - 1e-12) {
                best = Some((f, thr, imp));
            }
        }
    }
    best
}

/// Triple-loop valid cross-correlation plus bias, then ReLU.
pub fn naive_conv(input: &[f64], l: usize, c: usize, w: &[f64], f: usize, k: usize, b: &[f64]) -> Vec<f64> {
    let out_len = l - k + 1;
    let mut out = vec![0.0; out_len * f];
    for t in 0..out_len {
        for fi in 0..f {
            let mut s = b[fi];
            for ki in 0..k {
                for ci in 0..c {
                    s += w[fi * k * c + ki * c + ci] * input[(t + ki) * c + ci];
                }
            }
            out[t * f + fi] = s.max(0.0);
        }
    }
    out
}

// ---- gradient checking ----

/// ReLU on/off states and pooling argmaxes of one forward pass.
fn pattern(ws: &Workspace) -> (Vec<bool>, Vec<usize>, Vec<usize>) {
    let a = &ws.act;
    let on = a.conv1.iter().chain(&a.conv2).chain(&a.dense1).chain(&a.dense2).map(|&v| v > 0.0).collect();
    (on, a.pool1_arg.clone(), a.pool2_arg.clone())
}

/// Mean cross-entropy over the batch with fixed dropout masks, plus the
/// activation pattern of every sample.
pub fn batch_loss(
    model: &DcnnModel,
    batch: &[(&[f64], usize)],
    masks: &[(Vec<f64>, Vec<f64>)],
    ws: &mut Workspace,
) -> (f64, Vec<(Vec<bool>, Vec<usize>, Vec<usize>)>) {
    let mut loss = 0.0;
    let mut pats = Vec::new();
    for ((x, y), (m1, m2)) in batch.iter().zip(masks) {
        model.forward(x, ws, DropoutMode::Fixed(m1, m2));
        loss += softmax_xent(&ws.act.logits, *y).0;
        pats.push(pattern(ws));
    }
    (loss / batch.len() as f64, pats)
}

#[derive(Debug, Clone)]
pub struct TensorCheck {
    pub name: &'static str,
    pub checked: usize,
    /// Entries whose ±h perturbation flipped a ReLU or pooling choice.
    pub skipped_kinks: usize,
    pub max_rel_error: f64,
    /// Analytic and numeric values at the worst entry.
    pub worst: (f64, f64),
    /// `‖a − n‖ / max(‖a‖, ‖n‖)` over the checked entries of the tensor.
    pub tensor_rel_error: f64,
}

/// Central-difference check of `analytic` against the batch loss. `stride`
/// of 1 checks every entry.
pub fn grad_check(
    model: &mut DcnnModel,
    batch: &[(&[f64], usize)],
    masks: &[(Vec<f64>, Vec<f64>)],
    analytic: &emgait_core::neural::Params,
    h: f64,
    stride: usize,
) -> Vec<TensorCheck> {
    let mut ws = Workspace::new(model);
    let (_, base_pat) = batch_loss(model, batch, masks, &mut ws);
    let mut out = Vec::with_capacity(N_TENSORS);
    for t in 0..N_TENSORS {
        let len = model.params.tensors()[t].len();
        let mut check = TensorCheck { name: TENSOR_NAMES[t], checked: 0, skipped_kinks: 0, max_rel_error: 0.0, worst: (0.0, 0.0), tensor_rel_error: 0.0 };
        let (mut diff2, mut a2, mut n2) = (0.0, 0.0, 0.0);
        let mut i = 0;
        while i < len {
            let orig = model.params.tensors()[t][i];
            model.params.tensors_mut()[t][i] = orig + h;
            let (lp, pp) = batch_loss(model, batch, masks, &mut ws);
            model.params.tensors_mut()[t][i] = orig - h;
            let (lm, pm) = batch_loss(model, batch, masks, &mut ws);
            model.params.tensors_mut()[t][i] = orig;
            if pp != base_pat || pm != base_pat {
                check.skipped_kinks += 1;
            } else {
                let numeric = (lp - lm) / (2.0 * h);
                let a = analytic.tensors()[t][i];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                diff2 += (a - numeric) * (a - numeric);
                a2 += a * a;
                n2 += numeric * numeric;
                if rel > check.max_rel_error {
                    check.max_rel_error = rel;
                    check.worst = (a, numeric);
                }
                check.checked += 1;
            }
            i += stride;
        }
        check.tensor_rel_error = diff2.sqrt() / a2.sqrt().max(n2.sqrt()).max(1e-300);
        out.push(check);
    }
    out
}
