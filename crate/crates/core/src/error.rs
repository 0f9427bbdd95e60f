use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} atoms, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity exceeded: {what} supports n <= {cap}, got n = {n}")]
    Capacity { what: &'static str, n: usize, cap: usize },

    #[error("{context}: no convergence (best value {best:e}, certificate gap {gap:e})")]
    NumericalFailure { context: String, best: f64, gap: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The pair (f, g) is not K-ordered.
    #[error("K-domination fails at t = {t:e}: {detail}")]
    OrderViolation { t: f64, detail: String },

    #[error("property violation in {check}: {detail}")]
    PropertyViolation { check: &'static str, detail: String },

    #[error("internal consistency error: {0}")]
    Inconsistent(String),

    #[error("at t = {t:e}: {source}")]
    AtParameter { t: f64, source: Box<Error> },

    #[error("row {row}: {source}")]
    AtRow { row: usize, source: Box<Error> },

    #[error("instance format: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn at_t(self, t: f64) -> Self {
        Error::AtParameter { t, source: Box::new(self) }
    }

    pub(crate) fn at_row(self, row: usize) -> Self {
        Error::AtRow { row, source: Box::new(self) }
    }
}
