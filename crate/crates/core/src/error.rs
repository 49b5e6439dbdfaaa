use thiserror::Error;

use crate::units::Dimension;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: Dimension, found: Dimension },

    #[error("unknown unit `{0}`")]
    UnknownUnit(String),

    #[error("cannot parse quantity `{0}`")]
    BadQuantity(String),

    #[error("no reduction: {0}")]
    NoReduction(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
