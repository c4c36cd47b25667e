//! Band-pass filtering, zero-phase application, decimation and
//! standardization of EMG channels.
//!
//! Filters are Butterworth designs realized as cascaded biquads in
//! transposed direct form II, designed by the bilinear transform with
//! frequency prewarping so the band edges land exactly on −3.01 dB.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One second-order section, `H(z) = (b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Complex response at normalized angular frequency `omega` (rad/sample).
    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        let num = self.b0 + z1 * self.b1 + z2 * self.b2;
        let den = 1.0 + z1 * self.a1 + z2 * self.a2;
        num / den
    }

    /// True when both poles lie strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        // Jury conditions for a monic quadratic
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    pub fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// State reached after a unit step has settled.
    fn step_steady_state(&self) -> [f64; 2] {
        let y = self.dc_gain();
        let s2 = self.b2 - self.a2 * y;
        let s1 = self.b1 - self.a1 * y + s2;
        [s1, s2]
    }

    fn scaled(self, g: f64) -> Self {
        Self { b0: self.b0 * g, b1: self.b1 * g, b2: self.b2 * g, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterDesign {
    Bandpass { order: usize, low_hz: f64, high_hz: f64, fs_hz: f64 },
    Lowpass { order: usize, cutoff_hz: f64, fs_hz: f64 },
}

impl FilterDesign {
    pub fn fs_hz(&self) -> f64 {
        match *self {
            FilterDesign::Bandpass { fs_hz, .. } | FilterDesign::Lowpass { fs_hz, .. } => fs_hz,
        }
    }
}

/// A cascade of biquads together with the design it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiquadCascade {
    pub sections: Vec<Biquad>,
    pub design: FilterDesign,
}

impl BiquadCascade {
    pub fn response(&self, omega: f64) -> Complex64 {
        self.sections.iter().map(|s| s.response(omega)).product()
    }

    /// Single-pass magnitude at `f_hz`, in dB.
    pub fn magnitude_db(&self, f_hz: f64) -> f64 {
        let omega = 2.0 * PI * f_hz / self.design.fs_hz();
        20.0 * libm::log10(self.response(omega).norm())
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }

    /// Number of delay elements across all sections.
    pub fn state_len(&self) -> usize {
        2 * self.sections.len()
    }

    /// Causal single pass from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut state = vec![[0.0; 2]; self.sections.len()];
        let mut y = x.to_vec();
        run_cascade(&self.sections, &mut state, &mut y);
        y
    }

    fn steady_state(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let [s1, s2] = s.step_steady_state();
                let zi = [s1 * scale, s2 * scale];
                scale *= s.dc_gain();
                zi
            })
            .collect()
    }
}

fn run_cascade(sections: &[Biquad], state: &mut [[f64; 2]], buf: &mut [f64]) {
    for (s, st) in sections.iter().zip(state.iter_mut()) {
        let [mut z1, mut z2] = *st;
        for v in buf.iter_mut() {
            let x = *v;
            let y = s.b0 * x + z1;
            z1 = s.b1 * x - s.a1 * y + z2;
            z2 = s.b2 * x - s.a2 * y;
            *v = y;
        }
        *st = [z1, z2];
    }
}

fn butterworth_prototype_poles(n: usize) -> impl Iterator<Item = Complex64> {
    (0..n).map(move |k| {
        let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
        Complex64::from_polar(1.0, theta)
    })
}

fn bilinear(s: Complex64, fs: f64) -> Complex64 {
    let k = 2.0 * fs;
    (k + s) / (k - s)
}

fn prewarp(f_hz: f64, fs: f64) -> f64 {
    2.0 * fs * libm::tan(PI * f_hz / fs)
}

// Groups z-plane poles into second-order denominators: conjugate pairs
// first, then real poles two at a time. A single leftover real pole gives a
// first-order denominator (a2 = 0).
fn pole_denominators(poles: &[Complex64]) -> Vec<(f64, f64)> {
    let tol = 1e-10;
    let mut out = Vec::new();
    let mut reals = Vec::new();
    for p in poles {
        if p.im > tol {
            out.push((-2.0 * p.re, p.norm_sqr()));
        } else if p.im.abs() <= tol {
            reals.push(p.re);
        }
    }
    reals.sort_by(|a, b| b.total_cmp(a));
    for pair in reals.chunks(2) {
        match *pair {
            [r1, r2] => out.push((-(r1 + r2), r1 * r2)),
            [r] => out.push((-r, 0.0)),
            _ => unreachable!(),
        }
    }
    out
}

/// Butterworth band-pass of total order `order` (even): a prototype of
/// order `order / 2` mapped to the band, giving `order / 2` biquads.
pub fn design_butterworth_bandpass(order: usize, low_hz: f64, high_hz: f64, fs_hz: f64) -> Result<BiquadCascade> {
    if !(low_hz > 0.0 && low_hz < high_hz && high_hz < fs_hz / 2.0) || !fs_hz.is_finite() {
        return Err(Error::InvalidBand { low_hz, high_hz, fs_hz });
    }
    if order == 0 || order % 2 != 0 {
        return Err(Error::InvalidParameter(alloc::format!("band-pass order must be even and positive, got {order}")));
    }
    let n = order / 2;
    let w_low = prewarp(low_hz, fs_hz);
    let w_high = prewarp(high_hz, fs_hz);
    let bandwidth = w_high - w_low;
    let w0_sq = w_low * w_high;

    let mut z_poles = Vec::with_capacity(2 * n);
    for p in butterworth_prototype_poles(n) {
        // s² - p·B·s + ω0² = 0
        let half = p * bandwidth * 0.5;
        let root = (half * half - w0_sq).sqrt();
        z_poles.push(bilinear(half + root, fs_hz));
        z_poles.push(bilinear(half - root, fs_hz));
    }

    let omega_center = 2.0 * libm::atan(libm::sqrt(w0_sq) / (2.0 * fs_hz));
    let sections = pole_denominators(&z_poles)
        .into_iter()
        .map(|(a1, a2)| {
            let raw = Biquad { b0: 1.0, b1: 0.0, b2: -1.0, a1, a2 };
            raw.scaled(1.0 / raw.response(omega_center).norm())
        })
        .collect();
    Ok(BiquadCascade { sections, design: FilterDesign::Bandpass { order, low_hz, high_hz, fs_hz } })
}

/// Butterworth low-pass of the given order with unit DC gain.
pub fn design_butterworth_lowpass(order: usize, cutoff_hz: f64, fs_hz: f64) -> Result<BiquadCascade> {
    if !(cutoff_hz > 0.0 && cutoff_hz < fs_hz / 2.0) {
        return Err(Error::InvalidBand { low_hz: 0.0, high_hz: cutoff_hz, fs_hz });
    }
    if order == 0 {
        return Err(Error::InvalidParameter("low-pass order must be positive".into()));
    }
    let wc = prewarp(cutoff_hz, fs_hz);
    let z_poles: Vec<Complex64> = butterworth_prototype_poles(order).map(|p| bilinear(p * wc, fs_hz)).collect();
    let sections = pole_denominators(&z_poles)
        .into_iter()
        .map(|(a1, a2)| {
            let raw = if a2 == 0.0 {
                Biquad { b0: 1.0, b1: 1.0, b2: 0.0, a1, a2 }
            } else {
                Biquad { b0: 1.0, b1: 2.0, b2: 1.0, a1, a2 }
            };
            raw.scaled(1.0 / raw.dc_gain())
        })
        .collect();
    Ok(BiquadCascade { sections, design: FilterDesign::Lowpass { order, cutoff_hz, fs_hz } })
}

/// Zero-phase filtering: forward pass, reverse, forward pass, reverse.
///
/// The signal is extended at both ends by odd reflection of length
/// `3 × state_len` and each pass starts from the step steady state scaled
/// by the first sample it sees; the extension is trimmed afterwards.
pub fn filtfilt(filter: &BiquadCascade, x: &[f64]) -> Result<Vec<f64>> {
    let pad = 3 * filter.state_len();
    if x.len() <= pad {
        return Err(Error::SignalTooShort { len: x.len(), needed: pad });
    }
    let n = x.len();
    let first = x[0];
    let last = x[n - 1];
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((n - 1 - pad..n - 1).rev().map(|i| 2.0 * last - x[i]));

    let zi = filter.steady_state();
    let start_state = |v: f64| zi.iter().map(|z| [z[0] * v, z[1] * v]).collect::<Vec<_>>();

    let mut state = start_state(ext[0]);
    run_cascade(&filter.sections, &mut state, &mut ext);
    ext.reverse();
    let mut state = start_state(ext[0]);
    run_cascade(&filter.sections, &mut state, &mut ext);
    ext.reverse();

    ext.truncate(n + pad);
    ext.drain(..pad);
    Ok(ext)
}

/// Keeps every `factor`-th sample starting at index 0.
pub fn decimate(x: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor == 0 {
        return Err(Error::InvalidFactor("factor must be at least 1".into()));
    }
    Ok(x.iter().step_by(factor).copied().collect())
}

/// A zero-mean, unit-variance copy of a series and the moments removed.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedSignal {
    pub samples: Vec<f64>,
    pub applied_mean: f64,
    /// Population standard deviation; 0 for a constant input.
    pub applied_std: f64,
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn population_std(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    libm::sqrt(x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64)
}

pub fn standardize(x: &[f64]) -> StandardizedSignal {
    let applied_mean = mean(x);
    let applied_std = population_std(x);
    let samples = if applied_std > 0.0 {
        x.iter().map(|v| (v - applied_mean) / applied_std).collect()
    } else {
        vec![0.0; x.len()]
    };
    StandardizedSignal { samples, applied_mean, applied_std }
}
