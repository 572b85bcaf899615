use thiserror::Error;

use crate::exactnum::NumError;
use crate::qkit::IndexError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("singular matrix")]
    Singular,
    #[error("partial transpose is not invertible")]
    SingularPartialTranspose,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("kernel has dimension {0}, expected 1")]
    DegenerateKernel(usize),
    #[error("negative rate {rate} for transition {from} -> {to}")]
    NegativeRate { from: usize, to: usize, rate: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Whether the failure is an accident of the sampled point rather than of the identity.
    pub fn is_resamplable(&self) -> bool {
        matches!(
            self,
            Error::Num(
                NumError::PoleEncountered
                    | NumError::ZeroDenominator
                    | NumError::ZeroToNegativePower
                    | NumError::PrecisionExhausted
            ) | Error::Singular
                | Error::SingularPartialTranspose
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
