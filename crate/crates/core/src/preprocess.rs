//! Recording-to-window chain: QC, band-pass, decimation, standardization,
//! labeling and windowing for a whole dataset.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{Leg, Recording};
use crate::dsp::{decimate, design_butterworth_bandpass, design_butterworth_lowpass, filtfilt, standardize, BiquadCascade};
use crate::features::{compute_thresholds, extract_features, FeatureMatrix, ZcMode, ZcThresholds};
use crate::labeling::{detect_cycles, label_samples, qc_filter, QcConfig, DEFAULT_STANCE_FRACTION};
use crate::windowing::{make_windows, WindowConfig, WindowTensor};
use crate::{Error, Result, N_CHANNELS};

/// Anti-alias cutoff as a fraction of the output rate.
pub const ANTI_ALIAS_FRACTION: f64 = 0.45;
pub const ANTI_ALIAS_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub filter_order: usize,
    pub target_rate_hz: f64,
    /// Low-pass at `0.45 × target_rate_hz` before decimating.
    pub anti_alias: bool,
    pub stance_fraction: f64,
    pub qc: QcConfig,
    pub window: WindowConfig,
    pub zc_mode: ZcMode,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            band_low_hz: 20.0,
            band_high_hz: 300.0,
            filter_order: 4,
            target_rate_hz: 500.0,
            anti_alias: false,
            stance_fraction: DEFAULT_STANCE_FRACTION,
            qc: QcConfig::default(),
            window: WindowConfig::default(),
            zc_mode: ZcMode::Count,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stance_fraction > 0.0 && self.stance_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!("stance fraction {} outside (0, 1)", self.stance_fraction)));
        }
        if !(self.qc.cv_threshold >= 0.0) {
            return Err(Error::InvalidParameter(format!("QC threshold {} must be non-negative", self.qc.cv_threshold)));
        }
        if !(self.target_rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!("target rate {} must be positive", self.target_rate_hz)));
        }
        Ok(())
    }

    pub fn decimation_factor(&self, source_rate_hz: f64) -> Result<usize> {
        let ratio = source_rate_hz / self.target_rate_hz;
        let r = libm::round(ratio);
        if r < 1.0 || (ratio - r).abs() > 1e-9 {
            return Err(Error::InvalidFactor(format!("{source_rate_hz} Hz is not an integer multiple of {} Hz", self.target_rate_hz)));
        }
        Ok(r as usize)
    }

    pub fn bandpass(&self, fs_hz: f64) -> Result<BiquadCascade> {
        design_butterworth_bandpass(self.filter_order, self.band_low_hz, self.band_high_hz, fs_hz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub subject_id: String,
    pub leg: Leg,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingSummary {
    pub subject_id: String,
    pub leg: Leg,
    pub recording_index: u32,
    pub n_samples: usize,
    pub n_windows: usize,
    pub applied_mean: [f64; N_CHANNELS],
    pub applied_std: [f64; N_CHANNELS],
}

/// A processed, single recording.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedRecording {
    pub signals: [Vec<f64>; N_CHANNELS],
    pub thresholds: ZcThresholds,
    pub windows: WindowTensor,
    pub summary: RecordingSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub tensor: WindowTensor,
    /// Indexed by `recording_index`.
    pub thresholds: Vec<ZcThresholds>,
    pub recordings: Vec<RecordingSummary>,
    pub rejected: Vec<Rejection>,
    pub config: PreprocessConfig,
}

impl PreparedDataset {
    pub fn features(&self) -> Result<FeatureMatrix> {
        extract_features(&self.tensor, &self.thresholds, self.config.zc_mode)
    }

    /// Subjects with at least one window.
    pub fn subjects(&self) -> Vec<String> {
        self.tensor.meta.subjects.clone()
    }
}

/// Checks a recording's heel strikes against QC. `Err` carries the reason
/// for rejection.
fn qc_recording(rec: &Recording, qc: &QcConfig) -> core::result::Result<Vec<crate::labeling::GaitCycle>, String> {
    let cycles = detect_cycles(&rec.heel_strikes_s).map_err(|e| e.to_string())?;
    let outcome = qc_filter(&cycles, qc).map_err(|e| e.to_string())?;
    if outcome.subject_rejected {
        return Err("cycle durations vary too much".into());
    }
    Ok(outcome.kept)
}

/// Filters, decimates, standardizes, labels and windows one recording using
/// the given (already QC-filtered) cycles.
pub fn process_recording(
    rec: &Recording,
    kept_cycles: &[crate::labeling::GaitCycle],
    recording_index: u32,
    config: &PreprocessConfig,
) -> Result<ProcessedRecording> {
    rec.validate()?;
    let factor = config.decimation_factor(rec.sample_rate_hz)?;
    let band = config.bandpass(rec.sample_rate_hz)?;
    let anti_alias = if config.anti_alias && factor > 1 {
        Some(design_butterworth_lowpass(ANTI_ALIAS_ORDER, ANTI_ALIAS_FRACTION * config.target_rate_hz, rec.sample_rate_hz)?)
    } else {
        None
    };
    let mut signals: [Vec<f64>; N_CHANNELS] = Default::default();
    let mut applied_mean = [0.0; N_CHANNELS];
    let mut applied_std = [0.0; N_CHANNELS];
    for c in 0..N_CHANNELS {
        let mut x = filtfilt(&band, &rec.channels[c])?;
        if let Some(lp) = &anti_alias {
            x = filtfilt(lp, &x)?;
        }
        let s = standardize(&decimate(&x, factor)?);
        if s.applied_std == 0.0 {
            log::warn!("{} {} channel {c} is flat after filtering", rec.subject_id, rec.leg.as_str());
        }
        applied_mean[c] = s.applied_mean;
        applied_std[c] = s.applied_std;
        signals[c] = s.samples;
    }
    let labels = label_samples(rec, kept_cycles, config.stance_fraction, config.target_rate_hz)?;
    let thresholds = compute_thresholds(&signals);
    let windows = make_windows(&signals, &labels, &rec.subject_id, recording_index, &config.window)?;
    let summary = RecordingSummary {
        subject_id: rec.subject_id.clone(),
        leg: rec.leg,
        recording_index,
        n_samples: signals[0].len(),
        n_windows: windows.len(),
        applied_mean,
        applied_std,
    };
    Ok(ProcessedRecording { signals, thresholds, windows, summary })
}

/// Runs the chain over every recording. A subject is dropped entirely when
/// any of its recordings fails QC or cannot be processed.
pub fn preprocess_dataset(recordings: &[Recording], config: &PreprocessConfig) -> Result<PreparedDataset> {
    config.validate()?;
    let mut rejected = Vec::new();
    let mut kept = Vec::with_capacity(recordings.len());
    for rec in recordings {
        match qc_recording(rec, &config.qc) {
            Ok(cycles) => kept.push(Some(cycles)),
            Err(reason) => {
                log::info!("rejecting subject {} ({} leg): {reason}", rec.subject_id, rec.leg.as_str());
                rejected.push(Rejection { subject_id: rec.subject_id.clone(), leg: rec.leg, reason });
                kept.push(None);
            }
        }
    }
    let mut dropped: BTreeSet<String> = rejected.iter().map(|r| r.subject_id.clone()).collect();

    let mut processed = Vec::new();
    for (rec, cycles) in recordings.iter().zip(&kept) {
        let Some(cycles) = cycles else { continue };
        if dropped.contains(&rec.subject_id) {
            continue;
        }
        match process_recording(rec, cycles, 0, config) {
            Ok(p) => processed.push(p),
            Err(e @ (Error::InvalidBand { .. } | Error::InvalidFactor(_) | Error::InvalidParameter(_))) => return Err(e),
            Err(e) => {
                log::info!("rejecting subject {} ({} leg): {e}", rec.subject_id, rec.leg.as_str());
                rejected.push(Rejection { subject_id: rec.subject_id.clone(), leg: rec.leg, reason: e.to_string() });
                dropped.insert(rec.subject_id.clone());
            }
        }
    }

    let mut tensor = WindowTensor::empty(config.window.len, config.window.stride);
    let mut thresholds = Vec::new();
    let mut summaries = Vec::new();
    for p in processed.into_iter().filter(|p| !dropped.contains(&p.summary.subject_id)) {
        let idx = thresholds.len() as u32;
        tensor.append(&p.windows, idx)?;
        thresholds.push(p.thresholds);
        summaries.push(RecordingSummary { recording_index: idx, ..p.summary });
    }
    if tensor.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(PreparedDataset { tensor, thresholds, recordings: summaries, rejected, config: config.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticConfig};

    #[test]
    fn synthetic_dataset_prepares() {
        let cfg = SyntheticConfig { n_subjects: 2, cycles_per_subject: 6, ..Default::default() };
        let recs = generate_synthetic(&cfg, 3).unwrap();
        let prep = preprocess_dataset(&recs, &PreprocessConfig::default()).unwrap();
        assert_eq!(prep.recordings.len(), 4);
        assert_eq!(prep.thresholds.len(), 4);
        assert_eq!(prep.tensor.meta.subjects.len(), 2);
        assert_eq!(prep.recordings.iter().map(|r| r.n_windows).sum::<usize>(), prep.tensor.len());
        let feats = prep.features().unwrap();
        assert_eq!(feats.x.cols(), 20);
        assert!(feats.x.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn irregular_subject_is_dropped() {
        let cfg = SyntheticConfig { n_subjects: 2, cycles_per_subject: 10, ..Default::default() };
        let mut recs = generate_synthetic(&cfg, 3).unwrap();
        let first = recs[0].subject_id.clone();
        // lengthen one middle cycle by half and shorten the next to match
        let hs = &mut recs[0].heel_strikes_s;
        hs[3] += 0.5 * (hs[4] - hs[3]);
        let prep = preprocess_dataset(&recs, &PreprocessConfig::default()).unwrap();
        assert!(prep.rejected.iter().any(|r| r.subject_id == first));
        assert!(prep.recordings.iter().all(|r| r.subject_id != first));
    }

    #[test]
    fn non_integer_rate_is_rejected() {
        let cfg = SyntheticConfig { n_subjects: 1, cycles_per_subject: 5, ..Default::default() };
        let recs = generate_synthetic(&cfg, 1).unwrap();
        let pc = PreprocessConfig { target_rate_hz: 700.0, ..Default::default() };
        assert!(matches!(preprocess_dataset(&recs, &pc), Err(Error::InvalidFactor(_))));
    }
}
