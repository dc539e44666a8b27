use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid window: lookback {lookback} does not fit a series of length {len}")]
    InvalidWindow { lookback: usize, len: usize },

    #[error("capacity exceeded for {what}: requested {requested}, limit {limit}")]
    Capacity {
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate observation for asset {asset} on {date}")]
    Duplicate { asset: String, date: String },

    #[error("value {value} is not a whole number of ticks of size {tick}")]
    Quantization { value: f64, tick: f64 },

    #[error("clause {clause} has {found} literals, expected exactly 3")]
    Arity { clause: usize, found: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("assignment is missing variable {0}")]
    Incomplete(u32),

    #[error("insufficient data: need {needed} months, panel has {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
