use thiserror::Error;

use crate::domain::{AgeGroup, CauseGroup};

/// Failures while reading or validating input files.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum InputError {
    #[error("malformed ICD-10 code {0:?}")]
    MalformedCode(String),
    #[error("ICD-10 code {0:?} is not covered by any cause group")]
    UnknownCode(String),
    #[error("{file}:{line}: {message}")]
    Schema {
        file: String,
        line: u64,
        message: String,
    },
    #[error("missing exposure for age group {age} in {year}")]
    Gap { age: AgeGroup, year: i32 },
    #[error("{file}:{line}: year {year} outside configured span {first}..={last}")]
    Range {
        file: String,
        line: u64,
        year: i32,
        first: i32,
        last: i32,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl InputError {
    pub fn kind(&self) -> &'static str {
        match self {
            InputError::MalformedCode(_) => "MalformedCode",
            InputError::UnknownCode(_) => "UnknownCode",
            InputError::Schema { .. } => "SchemaError",
            InputError::Gap { .. } => "GapError",
            InputError::Range { .. } => "RangeError",
            InputError::Io { .. } => "IoError",
        }
    }
}

/// Failures of the numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("invalid model input: {0}")]
    InvalidInput(String),
    #[error("series is degenerate in {year}: age-standardised rate is zero")]
    DegenerateSeries { year: i32 },
    #[error("contribution denominator is zero (adjusted and unadjusted slopes coincide)")]
    DegenerateDenominator,
    #[error("all-cause rate for age {age} is not positive ({rate})")]
    NonPositiveRate { age: u32, rate: f64 },
    #[error("no WHO trend for {age} {cause}")]
    MissingWhoCell { age: AgeGroup, cause: CauseGroup },
    #[error("cell {age} {cause} has no coefficients and is not zeroed")]
    MissingCoefficients { age: AgeGroup, cause: CauseGroup },
    #[error("bootstrap statistic failed at iteration {iteration}: {source}")]
    StatisticFailure {
        iteration: usize,
        #[source]
        source: Box<ModelError>,
    },
    #[error("year {year} outside the range {first}..={last}")]
    YearOutOfRange { year: i32, first: i32, last: i32 },
}

impl ModelError {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelError::RankDeficient => "RankDeficient",
            ModelError::InvalidInput(_) => "InvalidInput",
            ModelError::DegenerateSeries { .. } => "DegenerateSeries",
            ModelError::DegenerateDenominator => "DegenerateDenominator",
            ModelError::NonPositiveRate { .. } => "NonPositiveRate",
            ModelError::MissingWhoCell { .. } => "MissingWhoCell",
            ModelError::MissingCoefficients { .. } => "MissingCoefficients",
            ModelError::StatisticFailure { .. } => "StatisticFailure",
            ModelError::YearOutOfRange { .. } => "YearOutOfRange",
        }
    }
}

/// Top-level error used by the command layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Input(e) => e.kind(),
            Error::Model(e) => e.kind(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
