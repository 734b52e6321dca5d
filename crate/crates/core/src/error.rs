use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} out of range [{lo}, {hi}]")]
    Range {
        what: &'static str,
        value: i64,
        lo: i64,
        hi: i64,
    },
    #[error("invalid parameter {what}: {reason}")]
    InvalidParameter { what: &'static str, reason: String },
    #[error("group size (m+1)^d = {m_plus_one}^{d} exceeds the index limit 2^31")]
    GroupTooLarge { m_plus_one: usize, d: usize },
    #[error("operands live on different groups or matrix sizes")]
    SpecMismatch,
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },
    #[error("input sequence is not simultaneously diagonal")]
    NonCommuting,
    #[error("memory guard: {entries} complex entries exceed the budget {budget}")]
    MemoryGuard { entries: u128, budget: u128 },
    #[error("empty {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(what: &'static str, value: i64, lo: i64, hi: i64) -> Result<()> {
    if value < lo || value > hi {
        Err(Error::Range { what, value, lo, hi })
    } else {
        Ok(())
    }
}

pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        what,
        reason: reason.into(),
    }
}
