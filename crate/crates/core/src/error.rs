use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} items, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    /// Total weight of a weighted mean was zero (an empty mixture component).
    #[error("total weight is zero")]
    ZeroWeight,

    #[error("dataset contains no observations")]
    EmptyDataset,

    #[error("exact counts requested for n = {n}, supported range is 2..={max}")]
    ExactRangeExceeded { n: usize, max: usize },

    #[error("row {row}: {count} compatible completions exceed the cap of {cap}")]
    CompletionCapExceeded { row: usize, count: u128, cap: u128 },

    #[error("row {row}: partial ranking where a full ranking is required")]
    PartialRow { row: usize },

    #[error("consensus rejection sampling exhausted its budget of {0} draws")]
    RejectionBudget(usize),

    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("count-table cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Config(#[from] toml::de::Error),
}

impl Error {
    /// Stable machine-readable name used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidRanking(_) => "invalid_ranking",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NonFinite(_) => "non_finite",
            Error::ZeroWeight => "zero_weight",
            Error::EmptyDataset => "empty_dataset",
            Error::ExactRangeExceeded { .. } => "exact_range_exceeded",
            Error::CompletionCapExceeded { .. } => "completion_cap_exceeded",
            Error::PartialRow { .. } => "partial_row",
            Error::RejectionBudget(_) => "rejection_budget",
            Error::Parse { .. } => "parse",
            Error::Cache(_) => "cache",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Config(_) => "config",
        }
    }
}
