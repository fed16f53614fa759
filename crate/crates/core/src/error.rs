use thiserror::Error;

use crate::rational::{ParseRationalError, Rational};

/// Errors raised by the analyses in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point `{0}` has no image under the map")]
    MissingMapping(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("invalid weight {weight} on atom `{id}`: weights must be nonnegative")]
    NegativeWeight { id: String, weight: Rational },
    #[error("duplicate point `{0}` in measure")]
    DuplicatePoint(String),
    #[error("weights sum to {actual} but the declared mass is {declared}")]
    MassMismatch { declared: Rational, actual: Rational },
    #[error("expected a probability measure, found total mass {0}")]
    NotProbability(Rational),
    #[error("measures must share the same total mass ({left} vs {right})")]
    UnequalMass { left: Rational, right: Rational },
    #[error("{n} atoms exceed the enumeration cap of {cap}")]
    TooManyAtoms { n: usize, cap: usize },
    #[error("enumeration stopped after {limit} maps before the classification could be decided")]
    LimitExceeded { limit: usize },
    #[error("search needs {needed} candidate maps, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("map is not in the constraint set: {0}")]
    NotInConstraintSet(String),
    #[error("coupling shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("argument out of domain: {0}")]
    OutOfDomain(String),
    #[error("supports overlap: {0}")]
    SupportsOverlap(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("invalid rational in {field}: {source}")]
    Rational {
        field: String,
        #[source]
        source: ParseRationalError,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed or inconsistent user input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::MissingMapping(_)
                | Error::DimensionMismatch { .. }
                | Error::DomainMismatch(_)
                | Error::NegativeWeight { .. }
                | Error::DuplicatePoint(_)
                | Error::MassMismatch { .. }
                | Error::NotProbability(_)
                | Error::UnequalMass { .. }
                | Error::ShapeMismatch(_)
                | Error::OutOfDomain(_)
                | Error::SupportsOverlap(_)
                | Error::InvalidParameter(_)
                | Error::Rational { .. }
                | Error::Json(_)
                | Error::NotInConstraintSet(_)
        )
    }

    /// True for errors caused by hitting a configured search limit.
    pub fn is_budget_error(&self) -> bool {
        matches!(self, Error::TooManyAtoms { .. } | Error::LimitExceeded { .. } | Error::BudgetExceeded { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
