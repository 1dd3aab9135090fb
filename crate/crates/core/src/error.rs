use thiserror::Error;

/// Errors raised by graph construction, constraint assembly and the eigensolver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid query pair ({u}, {v}): {msg}")]
    InvalidQuery { u: usize, v: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty constraint: {0}")]
    EmptyConstraint(String),

    /// Every candidate column was numerically dependent (or absent).
    #[error("constraint matrix is empty after rank pruning ({dropped} columns dropped)")]
    EmptyConstraintMatrix { dropped: usize },

    #[error("constraint column {column} is numerically dependent on the preceding columns")]
    RankDeficient { column: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// The start vector lies inside the constraint space for every retry.
    #[error("start vector projects to zero after {attempts} attempts")]
    DegenerateStart { attempts: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
