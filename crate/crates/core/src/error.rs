use thiserror::Error;

/// Errors raised by the simulation and measure routines.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative routine failed or produced a non-finite value.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// The requested measure is not defined for this input.
    #[error("unsupported measure: {0}")]
    UnsupportedMeasure(String),
    /// A root bracket does not straddle the threshold.
    #[error("no threshold crossing in bracket [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
