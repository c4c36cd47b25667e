use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum EmgaitError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed file: {reason}")]
    MalformedFile { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] emgait_core::Error),
    #[error("invalid argument: {0}")]
    Validation(String),
}

impl EmgaitError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Self::MalformedFile { path: path.into(), reason: reason.into() }
    }

    /// True for bad input, as opposed to an environment or internal failure.
    pub fn is_validation(&self) -> bool {
        use emgait_core::Error as E;
        match self {
            Self::MalformedFile { .. } | Self::Json { .. } | Self::Validation(_) => true,
            Self::Io { .. } => false,
            Self::Core(e) => matches!(
                e,
                E::InvalidRecording(_)
                    | E::NonMonotonicEvents
                    | E::EmptyChannel(_)
                    | E::InvalidParameter(_)
                    | E::InvalidConfig(_)
                    | E::InvalidBand { .. }
                    | E::InvalidFactor(_)
                    | E::BadK { .. }
                    | E::TooFewSubjects(_)
                    | E::TooFewEvents { .. }
                    | E::CorruptBlob(_)
            ),
        }
    }
}

pub type Result<T, E = EmgaitError> = std::result::Result<T, E>;
