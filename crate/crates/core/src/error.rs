use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Machine-readable code for a violated model invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationCode {
    StateCount,
    GeneratorShape,
    NonFinite,
    NegativeOffDiagonal { row: usize, col: usize },
    RowSum { row: usize },
    Reducible,
    NegativeRate { state: usize },
    NonPositivePremium { state: usize },
    FrozenState { state: usize },
    ClaimLaw { state: usize },
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::StateCount => "state_count",
            ViolationCode::GeneratorShape => "generator_shape",
            ViolationCode::NonFinite => "non_finite",
            ViolationCode::NegativeOffDiagonal { .. } => "negative_off_diagonal",
            ViolationCode::RowSum { .. } => "row_sum",
            ViolationCode::Reducible => "reducible",
            ViolationCode::NegativeRate { .. } => "negative_rate",
            ViolationCode::NonPositivePremium { .. } => "non_positive_premium",
            ViolationCode::FrozenState { .. } => "frozen_state",
            ViolationCode::ClaimLaw { .. } => "claim_law",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code.as_str(), self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {message}")]
    BadValue { key: String, message: String },
    #[error("invalid model: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("singular system in {what} (condition estimate {condition:e})")]
    Singular { what: String, condition: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("frozen state {0}: total event rate is zero")]
    FrozenState(usize),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            Error::Invalid(v) => v,
            _ => &[],
        }
    }
}
