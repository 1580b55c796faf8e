use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("block length {k} exceeds the supported maximum {max}")]
    BlockTooLong { k: u32, max: u32 },
    #[error("value {value} does not fit in {k} ternary digits")]
    OutOfBlockRange { value: i64, k: u32 },
    #[error("invalid ternary digits: {0:?}")]
    InvalidDigits(String),
    #[error("invalid digit pattern: {0}")]
    InvalidPattern(String),
    #[error("block lengths differ: {left} vs {right}")]
    DimensionMismatch { left: u32, right: u32 },
    #[error("enumeration of {size} elements exceeds the cap {cap}")]
    EnumerationCap { size: u128, cap: u64 },
    #[error("concatenation is only defined for non-negative block values")]
    NegativeConcat,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("not a complement: {count} target values uncovered (first {first})")]
    NotAComplement { count: usize, first: i64 },
    #[error("precision cap of {cap_bits} bits reached while deciding {what}")]
    PrecisionCap { cap_bits: u32, what: String },
    #[error("missing catalog entry: {0}")]
    MissingEntry(String),
    #[error("catalog entry {id} failed verification: {reason}")]
    Tampered { id: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
