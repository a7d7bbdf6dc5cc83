use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Document could not be decoded against its schema.
    #[error("parse error: {0}")]
    Parse(String),

    /// Document decoded but violates a model or hardware invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown preset `{0}` (expected one of bert-base, bert-large, gpt2)")]
    UnknownPreset(String),

    #[error("invalid dimension: {0} must be at least 1")]
    InvalidDimension(&'static str),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),

    #[error("division domain error: {0}")]
    DivisionDomain(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("hit rate of 1 never makes DRAM dominant")]
    NoThreshold,

    #[error("degenerate fit for `{metric}`: need at least 2 distinct years")]
    DegenerateFit { metric: String },

    #[error("index {index} out of range for {len} entries")]
    Index { index: usize, len: usize },

    /// A malformed CSV row; `line` is 1-based in the source text.
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
}
