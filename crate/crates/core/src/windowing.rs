//! Slicing standardized channels into fixed-length overlapping windows.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::labeling::{LabelStream, PhaseLabel};
use crate::{Error, Result, N_CHANNELS};

/// 80 ms at 500 Hz.
pub const WINDOW_LEN: usize = 40;
/// 32 ms at 500 Hz; consecutive windows share 24 samples.
pub const WINDOW_STRIDE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowLabelMode {
    /// Label of sample `start + len / 2`.
    Center,
    /// Most frequent label in the window, ties to stance.
    Majority,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub len: usize,
    pub stride: usize,
    pub label_mode: WindowLabelMode,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { len: WINDOW_LEN, stride: WINDOW_STRIDE, label_mode: WindowLabelMode::Center }
    }
}

/// Per-window bookkeeping shared by window tensors and feature matrices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WindowMeta {
    pub labels: Vec<PhaseLabel>,
    /// Distinct subject ids; windows refer to them by position.
    pub subjects: Vec<String>,
    pub subject_index: Vec<u32>,
    /// Index of the source recording, used to look up per-recording ZC thresholds.
    pub recording_index: Vec<u32>,
}

impl WindowMeta {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subject_id(&self, window: usize) -> &str {
        &self.subjects[self.subject_index[window] as usize]
    }

    pub fn label_indices(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.index()).collect()
    }

    pub fn push(&mut self, label: PhaseLabel, subject: &str, recording: u32) {
        let si = match self.subjects.iter().position(|s| s == subject) {
            Some(i) => i,
            None => {
                self.subjects.push(subject.into());
                self.subjects.len() - 1
            }
        };
        self.labels.push(label);
        self.subject_index.push(si as u32);
        self.recording_index.push(recording);
    }

    /// Metadata restricted to `rows`, in that order. The subject table is kept whole.
    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            subjects: self.subjects.clone(),
            subject_index: rows.iter().map(|&i| self.subject_index[i]).collect(),
            recording_index: rows.iter().map(|&i| self.recording_index[i]).collect(),
        }
    }
}

/// `N × len × 5` windows, laid out window-major then sample then channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTensor {
    pub data: Vec<f64>,
    pub meta: WindowMeta,
    pub window_len: usize,
    pub stride: usize,
}

impl WindowTensor {
    pub fn empty(window_len: usize, stride: usize) -> Self {
        Self { data: Vec::new(), meta: WindowMeta::default(), window_len, stride }
    }

    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn window_size(&self) -> usize {
        self.window_len * N_CHANNELS
    }

    /// Window `i` as `len × 5` row-major samples.
    pub fn window(&self, i: usize) -> &[f64] {
        let w = self.window_size();
        &self.data[i * w..(i + 1) * w]
    }

    /// Channel `c` of window `i` copied into `out`.
    pub fn channel_into(&self, i: usize, c: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.window(i).iter().skip(c).step_by(N_CHANNELS).copied());
    }

    /// Appends `other`, renumbering its recordings after ours by `recording_offset`.
    pub fn append(&mut self, other: &WindowTensor, recording_offset: u32) -> Result<()> {
        if other.window_len != self.window_len || other.stride != self.stride {
            return Err(Error::ShapeMismatch("window geometry differs".into()));
        }
        self.data.extend_from_slice(&other.data);
        for i in 0..other.len() {
            self.meta.push(other.meta.labels[i], other.meta.subject_id(i), other.meta.recording_index[i] + recording_offset);
        }
        Ok(())
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        let w = self.window_size();
        let mut data = Vec::with_capacity(rows.len() * w);
        for &i in rows {
            data.extend_from_slice(self.window(i));
        }
        Self { data, meta: self.meta.select(rows), window_len: self.window_len, stride: self.stride }
    }
}

/// Maximal runs of `true` as half-open ranges.
pub fn valid_runs(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &v) in mask.iter().enumerate() {
        match (v, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, mask.len()));
    }
    runs
}

/// Windows over every maximal valid run, starting at the run start and
/// stepping by `stride`; a window is emitted only if it fits in the run.
pub fn make_windows(
    signals: &[Vec<f64>; N_CHANNELS],
    labels: &LabelStream,
    subject_id: &str,
    recording_index: u32,
    config: &WindowConfig,
) -> Result<WindowTensor> {
    let len = signals[0].len();
    if signals.iter().any(|s| s.len() != len) {
        return Err(Error::ShapeMismatch("channels differ in length".into()));
    }
    if labels.len() != len {
        return Err(Error::ShapeMismatch(alloc::format!("{} labels for {len} samples", labels.len())));
    }
    if config.len == 0 || config.stride == 0 {
        return Err(Error::InvalidParameter("window length and stride must be positive".into()));
    }
    if len < config.len {
        return Err(Error::SignalTooShort { len, needed: config.len });
    }
    let mut out = WindowTensor::empty(config.len, config.stride);
    for (run_start, run_end) in valid_runs(&labels.valid_mask) {
        let mut start = run_start;
        while start + config.len <= run_end {
            for t in start..start + config.len {
                out.data.extend(signals.iter().map(|s| s[t]));
            }
            let label = match config.label_mode {
                WindowLabelMode::Center => labels.labels[start + config.len / 2],
                WindowLabelMode::Majority => {
                    let swing = labels.labels[start..start + config.len].iter().filter(|l| **l == PhaseLabel::Swing).count();
                    if 2 * swing > config.len {
                        PhaseLabel::Swing
                    } else {
                        PhaseLabel::Stance
                    }
                }
            };
            out.meta.push(label, subject_id, recording_index);
            start += config.stride;
        }
    }
    Ok(out)
}

/// Expected window count for a mask: `floor((run - len) / stride) + 1` per run long enough.
pub fn expected_window_count(mask: &[bool], len: usize, stride: usize) -> usize {
    valid_runs(mask).iter().map(|&(s, e)| if e - s >= len { (e - s - len) / stride + 1 } else { 0 }).sum()
}
