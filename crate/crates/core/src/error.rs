use thiserror::Error;

use crate::canonical::CanonicalError;
use crate::constraints::ConstraintError;
use crate::model::ModelError;
use crate::oracle::OracleError;
use crate::polytope::PolytopeError;
use crate::querylang::QueryError;
use crate::symbolic::SymbolicError;

/// Errors raised while reading any of the text formats (graph DSL, queries,
/// constraints, problem files, bounds and distribution files).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown variable `{name}` at {line}:{column}")]
    UnknownVariable { name: String, line: usize, column: usize },
    #[error("value {value} out of range for `{variable}` (cardinality {cardinality})")]
    ValueOutOfRange { variable: String, value: u64, cardinality: u32 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl ParseError {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax { line, column, message: message.into() }
    }

    /// Shifts the reported line, for text embedded at `first_line` of a larger file.
    pub(crate) fn at_line(self, first_line: usize) -> Self {
        match self {
            ParseError::Syntax { line, column, message } => {
                ParseError::Syntax { line: line + first_line - 1, column, message }
            }
            ParseError::UnknownVariable { name, line, column } => {
                ParseError::UnknownVariable { name, line: line + first_line - 1, column }
            }
            other => other,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("validation failed: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<ModelError>),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
