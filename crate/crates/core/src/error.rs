use std::fmt;

use serde::Serialize;

use crate::solver::SolveStatus;

/// One violated scenario invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation failed: {}", join(.0))]
    Validation(Vec<Violation>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("program build error: {0}")]
    Build(String),

    #[error("solver failed in {block} block at iteration {iteration}: {status:?}")]
    Solver {
        block: &'static str,
        iteration: usize,
        status: SolveStatus,
    },

    #[error("internal assertion failed: {0}")]
    Assertion(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation(_) | Error::Io(_) => 2,
            Error::Solver { .. } | Error::Build(_) | Error::DegenerateGeometry(_) => 3,
            Error::Domain(_) | Error::Assertion(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Validation(_) => "validation",
            Error::Domain(_) => "domain",
            Error::DegenerateGeometry(_) => "degenerate_geometry",
            Error::Build(_) => "build",
            Error::Solver { .. } => "solver",
            Error::Assertion(_) => "assertion",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
