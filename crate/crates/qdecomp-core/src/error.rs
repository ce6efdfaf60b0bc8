use alloc::string::String;
use core::fmt;

/// Errors surfaced by the estimation kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An operation received an empty value/weight list.
    EmptyInput,
    /// A treatment arm required by an estimator holds no observations.
    EmptyArm { treated: bool },
    /// A group label is not among the sample's declared levels.
    UnknownGroup(String),
    /// A quantile level outside the operation's domain.
    InvalidTau(f64),
    /// An observation violated a data invariant at construction.
    InvalidObservation { index: usize, reason: String },
    /// The sample as a whole is unusable (empty, zero total weight, ...).
    InvalidSample(String),
    /// Complier shares need an enrollment column that is absent.
    MissingEnrollment,
    /// Series arithmetic on mismatched grids or kinds.
    SeriesMismatch(String),
    /// Every observation of an average was excluded by trimming.
    AllExcluded,
    /// Too many bootstrap replications failed to estimate.
    BootstrapFailures { failed: usize, total: usize },
    /// A synthetic-data spec failed validation.
    InvalidSpec(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyInput => write!(f, "empty input"),
            Error::EmptyArm { treated } => {
                let arm = if *treated { "treated" } else { "control" };
                write!(f, "the {arm} arm holds no observations")
            }
            Error::UnknownGroup(g) => write!(f, "unknown group label `{g}`"),
            Error::InvalidTau(t) => write!(f, "quantile level {t} outside the valid domain"),
            Error::InvalidObservation { index, reason } => {
                write!(f, "observation {index}: {reason}")
            }
            Error::InvalidSample(reason) => write!(f, "invalid sample: {reason}"),
            Error::MissingEnrollment => {
                write!(f, "complier shares need an enrollment indicator, none present")
            }
            Error::SeriesMismatch(reason) => write!(f, "series mismatch: {reason}"),
            Error::AllExcluded => write!(f, "every observation was excluded by trimming"),
            Error::BootstrapFailures { failed, total } => {
                write!(f, "{failed} of {total} bootstrap replications failed to estimate")
            }
            Error::InvalidSpec(reason) => write!(f, "invalid generator spec: {reason}"),
        }
    }
}

impl core::error::Error for Error {}
