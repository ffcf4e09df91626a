use std::fmt;

/// Errors produced by estimation, simulation and inference routines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A vector length or matrix shape disagrees with the series dimension.
    DimMismatch { expected: usize, actual: usize },
    /// An argument lies outside its admissible range.
    InvalidArgument(String),
    /// Input data contains NaN or infinite entries.
    NonFiniteData,
    /// The estimated jump vector is zero; the projected series and any
    /// confidence interval derived from it are undefined.
    DegenerateJump,
    /// Cholesky factorization failed (matrix not numerically positive definite).
    Factorization(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimMismatch { expected, actual } => {
                write!(f, "dimension mismatch: expected {expected}, got {actual}")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NonFiniteData => write!(f, "input contains non-finite entries"),
            Error::DegenerateJump => {
                write!(f, "estimated jump is zero; interval is undefined")
            }
            Error::Factorization(msg) => write!(f, "factorization failed: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, actual })
    }
}
