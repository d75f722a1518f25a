//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("record has {actual_minutes} full minute(s), need at least {required_minutes}")]
    RecordTooShort {
        required_minutes: usize,
        actual_minutes: usize,
    },

    #[error("window at minute {start_minute} does not fit a record with {minutes} full minute(s)")]
    WindowOutOfRange { start_minute: usize, minutes: usize },

    #[error("record contains no samples")]
    EmptyRecord,

    #[error("row {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("row {line}: timestamp does not increase")]
    TimestampOrderError { line: usize },

    #[error("insufficient valid signal: {context}")]
    InsufficientSignal { context: &'static str },

    #[error("stratum '{stratum}' has {count} record(s), need at least 2")]
    StratumTooSmall { stratum: String, count: usize },

    #[error("invalid model config: {0}")]
    ConfigError(String),

    #[error("shape mismatch: {0}")]
    ShapeError(String),

    #[error("dataset contains no fragments")]
    EmptyDataset,

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    DivergenceError { epoch: usize },

    #[error("not a weight file (bad magic)")]
    FormatError,

    #[error("unsupported weight file version {found}, expected {expected}")]
    VersionError { found: u32, expected: u32 },

    #[error("corrupt weight file: {0}")]
    CorruptWeights(String),

    #[error("labels contain only one class")]
    DegenerateLabels,

    #[error("value outside domain: {0}")]
    DomainError(String),

    #[error("cannot aggregate an empty value list")]
    EmptyAggregate,

    #[error("invalid synthesis spec: {0}")]
    SpecError(String),

    #[error("record rejected by quality gate: {valid_fraction:.3} of signal is valid")]
    QualityRejected { valid_fraction: f64 },

    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short name, used for one-line CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::RecordTooShort { .. } => "RecordTooShort",
            Error::WindowOutOfRange { .. } => "WindowOutOfRange",
            Error::EmptyRecord => "EmptyRecord",
            Error::ParseError { .. } => "ParseError",
            Error::TimestampOrderError { .. } => "TimestampOrderError",
            Error::InsufficientSignal { .. } => "InsufficientSignal",
            Error::StratumTooSmall { .. } => "StratumTooSmall",
            Error::ConfigError(_) => "ConfigError",
            Error::ShapeError(_) => "ShapeError",
            Error::EmptyDataset => "EmptyDataset",
            Error::DivergenceError { .. } => "DivergenceError",
            Error::FormatError => "FormatError",
            Error::VersionError { .. } => "VersionError",
            Error::CorruptWeights(_) => "CorruptWeights",
            Error::DegenerateLabels => "DegenerateLabels",
            Error::DomainError(_) => "DomainError",
            Error::EmptyAggregate => "EmptyAggregate",
            Error::SpecError(_) => "SpecError",
            Error::QualityRejected { .. } => "QualityRejected",
            Error::Io(_) => "Io",
        }
    }
}
