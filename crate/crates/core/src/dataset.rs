//! Recordings, subject exclusion and the synthetic gait-EMG generator.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result, N_CHANNELS};

/// Sample rate of the source recordings.
pub const SOURCE_RATE_HZ: f64 = 1500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    Dominant,
    Nondominant,
}

impl Leg {
    pub fn as_str(self) -> &'static str {
        match self {
            Leg::Dominant => "dominant",
            Leg::Nondominant => "nondominant",
        }
    }
}

impl core::str::FromStr for Leg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dominant" => Ok(Leg::Dominant),
            "nondominant" => Ok(Leg::Nondominant),
            other => Err(Error::InvalidRecording(format!("unknown leg {other:?}"))),
        }
    }
}

/// One subject/leg: five EMG channels in `CHANNEL_NAMES` order plus the
/// heel-strike times of both legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub subject_id: String,
    pub leg: Leg,
    pub sample_rate_hz: f64,
    pub channels: [Vec<f64>; N_CHANNELS],
    pub heel_strikes_s: Vec<f64>,
    pub opposite_heel_strikes_s: Vec<f64>,
    pub injury_history: bool,
}

impl Recording {
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Time of the last sample.
    pub fn duration_s(&self) -> f64 {
        self.len().saturating_sub(1) as f64 / self.sample_rate_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) || !self.sample_rate_hz.is_finite() {
            return Err(Error::InvalidRecording(format!("sample rate {} must be positive", self.sample_rate_hz)));
        }
        for (c, ch) in self.channels.iter().enumerate() {
            if ch.len() < 2 {
                return Err(Error::EmptyChannel(c));
            }
        }
        let n = self.len();
        if self.channels.iter().any(|ch| ch.len() != n) {
            return Err(Error::InvalidRecording("channels differ in length".into()));
        }
        let duration = self.duration_s();
        for events in [&self.heel_strikes_s, &self.opposite_heel_strikes_s] {
            let ascending = events.windows(2).all(|w| w[0] < w[1]);
            let in_range = events.iter().all(|&t| (0.0..=duration).contains(&t));
            if !ascending || !in_range {
                return Err(Error::NonMonotonicEvents);
            }
        }
        Ok(())
    }
}

/// Drops recordings whose subject id is in `ids`, keeping order.
pub fn exclude_subjects(dataset: Vec<Recording>, ids: &BTreeSet<String>) -> Vec<Recording> {
    for id in ids {
        if !dataset.iter().any(|r| &r.subject_id == id) {
            log::info!("exclusion id {id} matches no recording");
        }
    }
    dataset.into_iter().filter(|r| !ids.contains(&r.subject_id)).collect()
}

pub fn exclude_injured(dataset: Vec<Recording>) -> Vec<Recording> {
    dataset.into_iter().filter(|r| !r.injury_history).collect()
}

/// Distinct subject ids in first-seen order.
pub fn subject_ids(dataset: &[Recording]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    dataset.iter().filter(|r| seen.insert(r.subject_id.clone())).map(|r| r.subject_id.clone()).collect()
}

/// A burst of muscle activity over part of the gait cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstEnvelope {
    pub onset_pct: f64,
    pub offset_pct: f64,
    pub gain: f64,
}

impl BurstEnvelope {
    pub const fn new(onset_pct: f64, offset_pct: f64, gain: f64) -> Self {
        Self { onset_pct, offset_pct, gain }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_subjects: usize,
    pub cycles_per_subject: usize,
    pub mean_cycle_s: f64,
    /// Each cycle lasts `mean_cycle_s · (1 ± u·jitter)` with `u` uniform in [-1, 1].
    pub cycle_jitter_frac: f64,
    pub stance_fraction: f64,
    /// Activity bursts per channel, in `CHANNEL_NAMES` order.
    pub envelopes: [Vec<BurstEnvelope>; N_CHANNELS],
    pub noise_std: f64,
    /// Per-channel probability that a recording carries only noise on it.
    pub corrupt_channel_prob: f64,
    pub sample_rate_hz: f64,
    /// Offset of the other leg's heel strikes as a fraction of the cycle.
    pub opposite_offset_frac: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_subjects: 12,
            cycles_per_subject: 49,
            mean_cycle_s: 1.1,
            cycle_jitter_frac: 0.05,
            stance_fraction: 0.60,
            envelopes: default_envelopes(),
            noise_std: 0.1,
            corrupt_channel_prob: 0.0,
            sample_rate_hz: SOURCE_RATE_HZ,
            opposite_offset_frac: 0.5,
        }
    }
}

/// Stance muscles (VL, GL, GM) fire in the first 60% of the cycle, the
/// hamstrings (BF, MH) during swing.
pub fn default_envelopes() -> [Vec<BurstEnvelope>; N_CHANNELS] {
    [
        vec![BurstEnvelope::new(0.0, 25.0, 1.0)],
        vec![BurstEnvelope::new(60.0, 100.0, 1.0)],
        vec![BurstEnvelope::new(65.0, 100.0, 0.8)],
        vec![BurstEnvelope::new(10.0, 58.0, 1.0)],
        vec![BurstEnvelope::new(5.0, 60.0, 1.2)],
    ]
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_subjects == 0 {
            return bad("n_subjects must be at least 1".into());
        }
        if self.cycles_per_subject < 3 {
            return bad(format!("cycles_per_subject must be at least 3, got {}", self.cycles_per_subject));
        }
        if !(self.mean_cycle_s > 0.0) {
            return bad("mean_cycle_s must be positive".into());
        }
        if !(0.0..0.5).contains(&self.cycle_jitter_frac) {
            return bad(format!("cycle_jitter_frac must lie in [0, 0.5), got {}", self.cycle_jitter_frac));
        }
        if !(self.stance_fraction > 0.0 && self.stance_fraction < 1.0) {
            return bad("stance_fraction must lie in (0, 1)".into());
        }
        if !(self.noise_std >= 0.0) {
            return bad("noise_std must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.corrupt_channel_prob) {
            return bad("corrupt_channel_prob must lie in [0, 1]".into());
        }
        if !(self.sample_rate_hz > 600.0) {
            return bad("sample_rate_hz must exceed 600 Hz to carry the 20-300 Hz band".into());
        }
        if !(0.0..1.0).contains(&self.opposite_offset_frac) {
            return bad("opposite_offset_frac must lie in [0, 1)".into());
        }
        for (c, envs) in self.envelopes.iter().enumerate() {
            for e in envs {
                let ok = 0.0 <= e.onset_pct && e.onset_pct < e.offset_pct && e.offset_pct <= 100.0;
                if !ok {
                    return bad(format!("channel {c}: envelope {}..{} must satisfy 0 <= onset < offset <= 100", e.onset_pct, e.offset_pct));
                }
            }
        }
        Ok(())
    }
}

fn envelope_gain(envs: &[BurstEnvelope], pct: f64) -> f64 {
    envs.iter().filter(|e| e.onset_pct <= pct && pct < e.offset_pct).map(|e| e.gain).sum()
}

/// Generates two recordings (dominant, nondominant) per subject.
///
/// Each channel is an amplitude-modulated 20–300 Hz band-limited noise
/// carrier: the modulation is the sum of that channel's bursts active at the
/// current gait percent, plus white noise of `noise_std`. Recordings start
/// on a heel strike and end on the last one. The result is a pure function
/// of `(config, seed)`.
pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<Vec<Recording>> {
    config.validate()?;
    let fs = config.sample_rate_hz;
    let carrier_filter = dsp::design_butterworth_bandpass(4, 20.0, 300.0, fs)?;
    let mut out = Vec::with_capacity(2 * config.n_subjects);
    for s in 0..config.n_subjects {
        for (li, leg) in [Leg::Dominant, Leg::Nondominant].into_iter().enumerate() {
            let stream = derive_seed(seed, (2 * s + li) as u64);
            let mut rng = rng_from_seed(stream);

            let mut strikes = Vec::with_capacity(config.cycles_per_subject + 1);
            let mut t = 0.0;
            strikes.push(t);
            for _ in 0..config.cycles_per_subject {
                let u: f64 = if config.cycle_jitter_frac > 0.0 { rng.random_range(-1.0..=1.0) } else { 0.0 };
                t += config.mean_cycle_s * (1.0 + u * config.cycle_jitter_frac);
                strikes.push(t);
            }
            let opposite: Vec<f64> =
                strikes.windows(2).map(|w| w[0] + config.opposite_offset_frac * (w[1] - w[0])).collect();

            // the last sample lands on or just after the final strike
            let n = libm::ceil(t * fs - 1e-9) as usize + 1;
            let corrupted: [bool; N_CHANNELS] =
                core::array::from_fn(|_| config.corrupt_channel_prob > 0.0 && rng.random::<f64>() < config.corrupt_channel_prob);

            // gait percent per sample; the final sample sits on the last strike
            let mut pct = vec![0.0; n];
            let mut ci = 0;
            for (i, p) in pct.iter_mut().enumerate() {
                let ti = i as f64 / fs;
                while ci + 2 < strikes.len() && ti >= strikes[ci + 1] {
                    ci += 1;
                }
                let (a, b) = (strikes[ci], strikes[ci + 1]);
                *p = (100.0 * (ti - a) / (b - a)).clamp(0.0, 100.0);
            }

            let channels: [Vec<f64>; N_CHANNELS] = core::array::from_fn(|c| {
                let white: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let carrier = dsp::filtfilt(&carrier_filter, &white).unwrap_or(white);
                let carrier_std = dsp::population_std(&carrier);
                let norm = if carrier_std > 0.0 { 1.0 / carrier_std } else { 0.0 };
                carrier
                    .iter()
                    .zip(&pct)
                    .map(|(&v, &p)| {
                        let gain = if corrupted[c] { 0.0 } else { envelope_gain(&config.envelopes[c], p) };
                        let noise: f64 = rng.sample(StandardNormal);
                        gain * v * norm + config.noise_std * noise
                    })
                    .collect()
            });

            out.push(Recording {
                subject_id: format!("S{:03}", s + 1),
                leg,
                sample_rate_hz: fs,
                channels,
                heel_strikes_s: strikes,
                opposite_heel_strikes_s: opposite,
                injury_history: false,
            });
        }
    }
    Ok(out)
}

impl Recording {
    /// Minimal constructor used by tests and importers.
    pub fn new(subject_id: impl ToString, leg: Leg, sample_rate_hz: f64, channels: [Vec<f64>; N_CHANNELS]) -> Self {
        Self {
            subject_id: subject_id.to_string(),
            leg,
            sample_rate_hz,
            channels,
            heel_strikes_s: Vec::new(),
            opposite_heel_strikes_s: Vec::new(),
            injury_history: false,
        }
    }
}
