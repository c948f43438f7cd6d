use num_bigint::BigUint;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An exhaustive enumeration would visit more points than allowed.
    #[error("enumeration of {cardinality} points exceeds the budget of {budget}")]
    BudgetExceeded { cardinality: BigUint, budget: u64 },

    #[error("invalid ring: {0}")]
    InvalidRing(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("characteristic {characteristic} does not exceed degree {degree}")]
    UnsupportedCharacteristic { characteristic: u64, degree: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An exact identity that must hold by construction was violated.
    #[error("internal identity violated: {0}")]
    IdentityViolation(String),
}

impl Error {
    pub(crate) fn parse(position: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            position,
            message: message.into(),
        }
    }

    pub(crate) fn precondition(message: impl Into<String>) -> Self {
        Error::Precondition(message.into())
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
