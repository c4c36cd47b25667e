//! Gait cycles from heel strikes, cycle quality control, and per-sample
//! stance/swing labels.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::Recording;
use crate::{Error, Result};

/// Default share of the cycle spent in stance.
pub const DEFAULT_STANCE_FRACTION: f64 = 0.60;
/// Default limit on the coefficient of variation of cycle durations.
pub const DEFAULT_QC_CV_THRESHOLD: f64 = 0.20;

/// Interval between two successive heel strikes of the same leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitCycle {
    pub start_s: f64,
    pub end_s: f64,
    pub duration_s: f64,
}

impl GaitCycle {
    pub fn new(start_s: f64, end_s: f64) -> Self {
        Self { start_s, end_s, duration_s: end_s - start_s }
    }

    pub fn contains(&self, t_s: f64) -> bool {
        self.start_s <= t_s && t_s < self.end_s
    }
}

/// Binary gait phase. The discriminant is the class index used by the
/// classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    Stance = 0,
    Swing = 1,
}

impl PhaseLabel {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Self::Stance),
            1 => Some(Self::Swing),
            _ => None,
        }
    }
}

/// Labels aligned to a (possibly downsampled) time base.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelStream {
    pub labels: Vec<PhaseLabel>,
    pub gait_percent: Vec<f64>,
    /// False for samples outside every retained cycle.
    pub valid_mask: Vec<bool>,
    pub rate_hz: f64,
}

impl LabelStream {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn detect_cycles(heel_strikes_s: &[f64]) -> Result<Vec<GaitCycle>> {
    if heel_strikes_s.len() < 2 {
        return Err(Error::TooFewEvents { needed: 2, got: heel_strikes_s.len() });
    }
    Ok(heel_strikes_s.windows(2).map(|w| GaitCycle::new(w[0], w[1])).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcConfig {
    /// Reject when std(durations) exceeds this multiple of mean(durations).
    pub cv_threshold: f64,
    /// Additionally reject when the first two retained cycles differ by more
    /// than `cv_threshold × mean`.
    pub check_first_second: bool,
}

impl Default for QcConfig {
    fn default() -> Self {
        Self { cv_threshold: DEFAULT_QC_CV_THRESHOLD, check_first_second: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcOutcome {
    pub kept: Vec<GaitCycle>,
    pub subject_rejected: bool,
}

/// Drops the first and last cycle and flags the recording when the remaining
/// durations vary too much.
pub fn qc_filter(cycles: &[GaitCycle], config: &QcConfig) -> Result<QcOutcome> {
    if cycles.len() < 3 {
        return Err(Error::TooFewEvents { needed: 3, got: cycles.len() });
    }
    let kept = cycles[1..cycles.len() - 1].to_vec();
    let durations: Vec<f64> = kept.iter().map(|c| c.duration_s).collect();
    let mean = crate::dsp::mean(&durations);
    let std = crate::dsp::population_std(&durations);
    let mut subject_rejected = std > config.cv_threshold * mean;
    if config.check_first_second && durations.len() >= 2 {
        subject_rejected |= (durations[0] - durations[1]).abs() > config.cv_threshold * mean;
    }
    Ok(QcOutcome { kept, subject_rejected })
}

pub fn gait_percent_at(t_s: f64, cycle: &GaitCycle) -> Result<f64> {
    if !cycle.contains(t_s) {
        return Err(Error::OutOfCycle { t_s, start_s: cycle.start_s, end_s: cycle.end_s });
    }
    // rounding can push t just below end_s to exactly 100
    Ok((100.0 * (t_s - cycle.start_s) / cycle.duration_s).min(libm::nextafter(100.0, 0.0)))
}

pub fn phase_of_percent(p: f64, stance_fraction: f64) -> PhaseLabel {
    if p < 100.0 * stance_fraction {
        PhaseLabel::Stance
    } else {
        PhaseLabel::Swing
    }
}

/// Number of samples on an `out_rate_hz` grid that fit in the recording.
pub fn output_len(recording: &Recording, out_rate_hz: f64) -> usize {
    let n = recording.len();
    if n == 0 {
        return 0;
    }
    let ratio = recording.sample_rate_hz / out_rate_hz;
    let rounded = libm::round(ratio);
    if (ratio - rounded).abs() < 1e-9 && rounded >= 1.0 {
        // integer decimation: matches `dsp::decimate`
        (n - 1) / rounded as usize + 1
    } else {
        libm::floor(recording.duration_s() * out_rate_hz + 1e-9) as usize + 1
    }
}

/// Labels every sample of the `out_rate_hz` time base. `kept_cycles` must be
/// sorted and non-overlapping.
pub fn label_samples(
    recording: &Recording,
    kept_cycles: &[GaitCycle],
    stance_fraction: f64,
    out_rate_hz: f64,
) -> Result<LabelStream> {
    if !(out_rate_hz > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("output rate must be positive, got {out_rate_hz}")));
    }
    let n = output_len(recording, out_rate_hz);
    let mut labels = vec![PhaseLabel::Stance; n];
    let mut gait_percent = vec![0.0; n];
    let mut valid_mask = vec![false; n];
    let mut ci = 0;
    for i in 0..n {
        let t = i as f64 / out_rate_hz;
        while ci < kept_cycles.len() && t >= kept_cycles[ci].end_s {
            ci += 1;
        }
        let Some(cycle) = kept_cycles.get(ci) else { break };
        if let Ok(p) = gait_percent_at(t, cycle) {
            labels[i] = phase_of_percent(p, stance_fraction);
            gait_percent[i] = p;
            valid_mask[i] = true;
        }
    }
    Ok(LabelStream { labels, gait_percent, valid_mask, rate_hz: out_rate_hz })
}
