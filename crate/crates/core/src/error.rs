use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("interval too narrow: no {bits}-bit denominator fraction strictly inside ({lo}, {hi})")]
    Width { bits: u32, lo: String, hi: String },

    #[error(
        "precision budget exceeded: {required} bits requested (k = {k}, target = {target_frac_bits} fractional bits), cap is {cap}"
    )]
    PrecisionBudget {
        k: u64,
        target_frac_bits: u32,
        required: u64,
        cap: u64,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("length error: needed {needed} elements, only {available} available")]
    Length { needed: usize, available: usize },

    #[error("arity error: expected {expected} seeds, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("instance too large for the brute-force oracle: {0}")]
    Size(String),

    #[error("Weyl map incomplete: missing m = {0}")]
    Completeness(String),
}

pub type Result<T> = std::result::Result<T, Error>;
