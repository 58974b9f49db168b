use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A level of a coefficient field would exceed the memory budget.
    #[error("memory budget exceeded at level j={level}: {requested} coefficients requested, budget {budget}")]
    Resource {
        level: u32,
        requested: u128,
        budget: u128,
    },

    /// A precondition expressed as an inequality failed.
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn require_finite(label: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        input(format!("{label} must be finite, got {value}"))
    }
}
