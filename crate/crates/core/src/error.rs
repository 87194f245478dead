use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A single rejected CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based line number in the source text (the header is line 1).
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("row error: {0}")]
    Row(RowError),

    #[error("bar on {date} violates OHLC invariants: {reason}")]
    InvalidBar { date: NaiveDate, reason: String },

    #[error("dates must be strictly increasing: {prev} then {next}")]
    DateOrder { prev: NaiveDate, next: NaiveDate },

    #[error("split at {0} leaves an empty partition")]
    EmptyPartition(NaiveDate),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("size error: need at least {needed}, got {got} ({what})")]
    Size {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("optimizer did not converge after {evaluations} evaluations (best objective {best_objective})")]
    Convergence {
        evaluations: usize,
        best_objective: f64,
        best_params: Vec<f64>,
    },

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("all candidates failed: {0}")]
    AllFailed(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("persistence error: {0}")]
    Persistence(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub(crate) fn ensure_len(what: &'static str, needed: usize, got: usize) -> Result<()> {
    if got < needed {
        Err(Error::Size { what, needed, got })
    } else {
        Ok(())
    }
}
