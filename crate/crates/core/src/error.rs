use alloc::string::String;

/// Errors produced by the pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid recording: {0}")]
    InvalidRecording(String),
    #[error("heel-strike events are not strictly ascending or fall outside the recording")]
    NonMonotonicEvents,
    #[error("channel {0} is empty or shorter than two samples")]
    EmptyChannel(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid synthetic configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least {needed} heel strikes or cycles, got {got}")]
    TooFewEvents { needed: usize, got: usize },
    #[error("time {t_s} s lies outside the cycle [{start_s}, {end_s})")]
    OutOfCycle { t_s: f64, start_s: f64, end_s: f64 },
    #[error("invalid band {low_hz}..{high_hz} Hz for sample rate {fs_hz} Hz")]
    InvalidBand { low_hz: f64, high_hz: f64, fs_hz: f64 },
    #[error("signal of length {len} is too short, need more than {needed}")]
    SignalTooShort { len: usize, needed: usize },
    #[error("invalid decimation factor: {0}")]
    InvalidFactor(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("scaler or model used before fitting")]
    NotFitted,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("requested {k} components but the model holds {k_max}")]
    BadK { k: usize, k_max: usize },
    #[error("class {0} has no training samples")]
    MissingClass(usize),
    #[error("empty training input")]
    EmptyInput,
    #[error("pooled covariance is singular after ridge regularization")]
    SingularCovariance,
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(String),
    #[error("empty data split: {0}")]
    EmptySplit(String),
    #[error("corrupt weight blob: {0}")]
    CorruptBlob(String),
    #[error("need at least 2 subjects to split, got {0}")]
    TooFewSubjects(usize),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
