use std::fmt;

use thiserror::Error;

/// Syntax error in an expression or scale spec. Columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub message: String,
    pub column: usize,
}

impl ParseError {
    pub fn new(message: impl Into<String>, column: usize) -> Self {
        Self {
            message: message.into(),
            column,
        }
    }

    /// Shift the column by `offset` characters, for errors found inside a
    /// larger text.
    pub fn offset(mut self, offset: usize) -> Self {
        self.column += offset;
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

/// A domain fault raised while evaluating an expression.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} in `{subexpr}`")]
pub struct EvalError {
    pub message: String,
    pub subexpr: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid time scale: {0}")]
    InvalidScale(String),

    #[error("point {0} is not on the time scale")]
    OffScale(f64),

    #[error("grid function domain: {0}")]
    Domain(String),

    #[error("parse error at {0}")]
    Parse(#[from] ParseError),

    #[error("evaluation fault: {0}")]
    Eval(#[from] EvalError),

    #[error("boundary condition violated at t = {t}: expected {expected}, got {got}")]
    Boundary { t: f64, expected: f64, got: f64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("damped Newton did not converge after {iterations} iterations (final gradient norm {gradient_norm:e})")]
    NoConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("singular Hessian: numerical rank {rank} of {dim}")]
    Singular { rank: usize, dim: usize },

    #[error("no start converged; final gradient norms per start: {}", fmt_norms(.norms))]
    NoConvergentStart { norms: Vec<f64> },
}

fn fmt_norms(norms: &[f64]) -> String {
    norms
        .iter()
        .map(|n| format!("{n:e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
