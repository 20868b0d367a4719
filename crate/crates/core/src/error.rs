use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no closed-form kernel integral for {factor} against {marginal}")]
    NoClosedForm { factor: String, marginal: String },

    #[error("Gram matrix is not positive definite (last relative nugget tried: {nugget:e})")]
    SingularGram { nugget: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("level {level} has no data")]
    EmptyLevel { level: usize },

    #[error("level {level}: {source}")]
    AtLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("level {level} out of range (model has {levels} levels)")]
    LevelOutOfRange { level: usize, levels: usize },

    #[error("tridiagonal solve broke down at row {row}{context}")]
    TridiagonalBreakdown { row: usize, context: String },

    #[error("{0} requires a bounded (uniform) marginal")]
    UnboundedMarginal(&'static str),

    #[error("budget {budget} cannot afford one evaluation per level (needs {required})")]
    BudgetTooSmall { budget: f64, required: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn at_level(self, level: usize) -> Self {
        Error::AtLevel { level, source: Box::new(self) }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
