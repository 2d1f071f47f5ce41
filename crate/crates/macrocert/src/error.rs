use thiserror::Error;

/// Errors produced by state constructors and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("state dimension {needed} exceeds the configured maximum {max}")]
    Sizing { needed: usize, max: usize },

    #[error("degenerate branches: both components sit on quantum number {0}")]
    DegenerateBranches(i64),

    #[error("Fock cutoff too small: completeness defect {defect:.3e} exceeds {limit:.1e}")]
    CutoffTooSmall { defect: f64, limit: f64 },

    #[error("no sector with label {0}")]
    MissingSector(i64),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
