use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("record {record}: negative export value `{value}`")]
    NegativeValue { record: u64, value: String },

    #[error("record {record}: cannot parse `{value}` in column `{column}`")]
    BadValue {
        record: u64,
        column: &'static str,
        value: String,
    },

    #[error("duplicate row for year {year}, country `{country}`, product `{product}`")]
    DuplicateKey {
        year: i32,
        country: String,
        product: String,
    },

    #[error("year {year}: {kind} `{code}` has no positive export value")]
    EmptyRowOrColumn {
        year: i32,
        kind: &'static str,
        code: String,
    },

    #[error("product `{product}`: group id `{group}` outside 1..=11")]
    BadGroupId { product: String, group: String },

    #[error("duplicate code `{0}` in registry")]
    DuplicateCode(String),

    #[error("year {0} not in panel")]
    YearNotFound(i32),

    #[error("year {year}: degenerate totals ({detail})")]
    DegenerateTotals { year: i32, detail: String },

    #[error("RCA threshold must be positive and finite, got {0}")]
    BadThreshold(f64),

    #[error("registry mismatch: {0}")]
    RegistryMismatch(String),

    #[error("years must increase: {from} -> {to}")]
    NonIncreasingYears { from: i32, to: i32 },

    #[error("need at least two years, got {0}")]
    TooFewYears(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("RCA matrix for year {0} has no comparative advantages")]
    EmptyRcaMatrix(i32),

    #[error("period mismatch: test asks for {expected}, data is {found}")]
    PeriodMismatch { expected: String, found: String },

    #[error("no observations for {0}")]
    EmptySample(String),

    #[error("invalid test specification: {0}")]
    InvalidTestSpec(String),

    #[error("unknown indicator `{0}`")]
    UnknownIndicator(String),

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input data or arguments rather than
    /// by the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Json(_))
    }
}
