use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("vector must have at least one element")]
    EmptyVector,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    /// A configuration value failed validation. `key` is the dotted path of
    /// the offending field (e.g. `cluster.workers`).
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("grid point {value} is below the feasible minimum {min}")]
    InfeasibleGrid { value: f64, min: f64 },

    #[error("zero vector not allowed: {0}")]
    ZeroVector(&'static str),

    #[error("numeric failure in round {round}: {detail}")]
    Numeric { round: usize, detail: String },

    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },

    #[error("malformed input: {0}")]
    Decode(String),

    #[error("inconsistent state: {0}")]
    Inconsistent(String),

    #[error("budget of {budget} bits is below the first round's cost of {first_round} bits")]
    BudgetTooSmall { budget: u64, first_round: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn decode(msg: impl Into<String>) -> Self {
        Error::Decode(msg.into())
    }
}
