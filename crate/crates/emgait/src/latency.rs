//! Wall-clock timing of prediction calls.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub const MIN_REPEATS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    /// Mean duration of one call over the whole batch.
    pub mean_ms: f64,
    pub std_ms: f64,
    /// `mean_ms` divided by the number of windows predicted.
    pub per_window_ms: f64,
    pub repeats: usize,
}

/// Times `predict` after one untimed warm-up call. At least
/// [`MIN_REPEATS`] timed calls are made.
pub fn measure_predict_latency<R>(mut predict: impl FnMut() -> R, n_windows: usize, repeats: usize) -> LatencyStats {
    black_box(predict());
    let repeats = repeats.max(MIN_REPEATS);
    let times: Vec<f64> = (0..repeats)
        .map(|_| {
            let start = Instant::now();
            black_box(predict());
            start.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    let mean_ms = times.iter().sum::<f64>() / repeats as f64;
    let std_ms = (times.iter().map(|t| (t - mean_ms).powi(2)).sum::<f64>() / repeats as f64).sqrt();
    LatencyStats { mean_ms, std_ms, per_window_ms: mean_ms / n_windows.max(1) as f64, repeats }
}
