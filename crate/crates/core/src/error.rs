use thiserror::Error;

/// Errors raised by problem construction, oracles and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid configuration: {0}")]
    Configuration(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("f is not linear in y: gradient probes differ by {mismatch:e}")]
    NotLinearInY { mismatch: f64 },
    #[error("untrusted potential: {0}")]
    UntrustedPotential(String),
    #[error("operation requires a separable set: {0}")]
    NonSeparableSet(String),
    #[error("grid too large: {0}")]
    GridTooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            found,
        })
    }
}
