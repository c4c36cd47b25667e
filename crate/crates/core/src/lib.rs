//! Surface-EMG gait phase detection, the algorithmic half.
//!
//! Everything in this crate is pure computation over in-memory buffers and
//! builds without `std` (an allocator is required). Reading recordings from
//! disk, timing predictions and the command-line driver live in the `emgait`
//! crate.
//!
//! The pipeline, in order:
//!
//! 1. [`dataset`]: recordings of five lower-limb muscles plus heel-strike
//!    events, subject exclusion, and a synthetic gait-EMG generator.
//! 2. [`labeling`]: gait cycles, cycle quality control, stance/swing labels.
//! 3. [`dsp`]: Butterworth band-pass, zero-phase filtering, decimation,
//!    standardization.
//! 4. [`windowing`] and [`features`]: 40-sample windows with a 16-sample
//!    stride, and the ZC/MAV/SD/MAD feature set with a column scaler.
//! 5. [`pca`]: covariance eigendecomposition of the feature space.
//! 6. [`classical`]: Gaussian naive Bayes, CART, random forest and LDA with
//!    random hyperparameter search.
//! 7. [`neural`]: a 1D convolutional network trained by backpropagation.
//!
//! [`preprocess`] chains steps 1–4 for a whole dataset and [`split`] holds
//! the subject-wise train/test partitioning used by the evaluation harness.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classical;
pub mod dataset;
pub mod dsp;
mod error;
pub mod features;
pub mod labeling;
pub mod linalg;
pub mod neural;
pub mod pca;
pub mod preprocess;
pub mod rng;
pub mod split;
pub mod windowing;

pub use error::{Error, Result};

/// Channel order used everywhere in the crate.
pub const CHANNEL_NAMES: [&str; 5] = ["VL", "BF", "MH", "GL", "GM"];

/// Number of EMG channels per recording.
pub const N_CHANNELS: usize = 5;
