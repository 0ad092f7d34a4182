use thiserror::Error;

use crate::words::Word;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed input: bad rational, bad word, spec that fails its schema.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("depth {requested} exceeds the depth budget {budget}")]
    DepthOverflow { requested: usize, budget: usize },

    #[error("conditioning on null cylinder {axis}={word}")]
    NullConditioning { axis: Axis, word: Word },

    #[error("insufficient approximants: {0}")]
    InsufficientApproximants(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// Schema errors are input-format problems; everything else is a
    /// precondition failure on well-formed input.
    pub fn is_schema_error(&self) -> bool {
        matches!(self, Error::InvalidSpec(_))
    }

    pub(crate) fn spec(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::X => f.write_str("x"),
            Axis::Y => f.write_str("y"),
        }
    }
}
