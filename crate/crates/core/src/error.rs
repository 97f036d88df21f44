use std::io;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A pixel index, resolution or scheme is not valid for the request.
    #[error("addressing error: {0}")]
    Addressing(String),
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("row {row} out of bounds (1..={rows})")]
    Bounds { row: u64, rows: u64 },
    /// Unknown column or mismatched column layout.
    #[error("schema error: {0}")]
    Schema(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("degenerate region: {0}")]
    DegenerateRegion(String),
    /// Rows that collide on the same pixel when unique keys were requested.
    #[error("{} rows collide on shared pixels", .rows.len())]
    Uniqueness { rows: Vec<usize> },
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("stratification error: {0}")]
    Stratification(String),
    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),
    /// Missing multipoles in a power spectrum.
    #[error("spectrum gap: {0}")]
    Gap(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
