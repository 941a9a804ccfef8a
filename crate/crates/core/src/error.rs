use thiserror::Error;

use crate::geometry::{FarkasCertificate, Ray};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("constraint system is infeasible")]
    Infeasible(Box<FarkasCertificate>),

    #[error("polyhedron is unbounded")]
    Unbounded(Box<Ray>),

    #[error("points are affinely dependent: {0}")]
    Degenerate(String),

    #[error("invalid realization: {0}")]
    InvalidRealization(String),

    #[error("no violation to protect: functional value at full visibility is {0}")]
    NoViolation(f64),

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("solver failed: {message} (best safe bound {best_bound}, gap {gap:e})")]
    Solver {
        message: String,
        best_bound: f64,
        gap: f64,
    },

    #[error("zero-probability outcome")]
    ZeroProbability,

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn unknown(kind: &'static str, name: &str, available: &[&str]) -> Self {
        Error::UnknownName {
            kind,
            name: name.to_string(),
            available: available.join(", "),
        }
    }
}
