use chrono::{DateTime, Utc};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("meter {meter} ({kind}) has gaps in the hourly grid; missing: {}", format_instants(.missing))]
    Gap {
        meter: String,
        kind: String,
        missing: Vec<DateTime<Utc>>,
    },

    #[error("duplicate reading for meter {meter} at {timestamp}")]
    Duplicate {
        meter: String,
        timestamp: DateTime<Utc>,
    },

    #[error("unknown group `{0}`")]
    UnknownGroup(String),

    #[error("unknown meter `{0}`")]
    UnknownMeter(String),

    #[error("span mismatch: {0}")]
    SpanMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("scenario event at {at} lies outside the dataset span")]
    EventOutOfSpan { at: DateTime<Utc> },

    #[error("ground truth required: {0}")]
    MissingTruth(String),

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("design matrix is identically zero")]
    ZeroDesign,

    #[error("cluster count {k} is out of range for {n} points")]
    ClusterCount { k: usize, n: usize },

    #[error("cluster {0} has no members")]
    EmptyCluster(usize),

    #[error("need at least {needed} profiles, found {found}")]
    TooFewProfiles { needed: usize, found: usize },

    #[error("similarity row {0} sums to zero")]
    ZeroRowSum(usize),

    #[error("weights are off the probability simplex: {0}")]
    OffSimplex(String),

    #[error("series spans {available} samples but the window length is {window}")]
    InsufficientSpan { window: usize, available: usize },

    #[error("observable set {0} is empty")]
    EmptyObservableSet(&'static str),

    #[error("not enough customers: {0}")]
    InsufficientCustomers(String),

    #[error("mean absolute truth is zero; percentage error undefined")]
    ZeroTruth,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

fn format_instants(instants: &[DateTime<Utc>]) -> String {
    const SHOWN: usize = 12;
    let mut out: Vec<String> = instants
        .iter()
        .take(SHOWN)
        .map(|t| t.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .collect();
    if instants.len() > SHOWN {
        out.push(format!("... ({} total)", instants.len()));
    }
    out.join(", ")
}
