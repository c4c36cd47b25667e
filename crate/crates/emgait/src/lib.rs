//! File formats, the evaluation harness and report output for EMG
//! gait-phase detection. The algorithms live in [`emgait_core`].

pub mod error;
pub mod experiment;
pub mod io;
pub mod latency;
pub mod report;
pub mod source;
pub mod train;

pub use emgait_core as core;
pub use error::{EmgaitError, Result};
