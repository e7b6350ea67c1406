use thiserror::Error;

use crate::asymptotics::DegeneracyReport;

/// Errors produced by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    Dimension {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is rank deficient (column {column}, |r_jj| = {pivot:e})")]
    RankDeficient { column: usize, pivot: f64 },

    /// A tolerance could not be met. `best` is the best available value.
    #[error("accuracy error: {message} (best estimate {best:e})")]
    Accuracy { message: String, best: f64 },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate direction: {0}")]
    DegeneratePair(String),

    #[error("degenerate direction: {0}")]
    Degenerate(DegeneracyReport),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
