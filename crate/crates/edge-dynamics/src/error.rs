//! One error type for the whole crate; variants say what went wrong, the
//! Display impl says where the numbers stood.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on a scalar argument failed (e.g. `a <= 0`).
    InvalidParam(String),
    /// The Schwarzian derivative is undefined where `f'` vanishes.
    CriticalPoint { a: f64, z: f64 },
    /// Root finding found no solution in the requested interval.
    NoRoot { target: f64, lo: f64, hi: f64 },
    /// Trajectory too short for the requested classification.
    Inconclusive { needed: usize, got: usize },
    /// A constructive certificate failed its own verification.
    ConstructionFailed(String),
    /// An orbit left the bounded region before the computation finished.
    Diverged { step: usize },
    /// Matrix/vector shapes do not agree.
    Dimension(String),
    /// Rows of the design matrix are not orthogonal within tolerance.
    Orthogonality { i: usize, j: usize, dot: f64, tol: f64 },
    /// No sample has a positive effective-parameter coefficient.
    NoPositiveLabel,
    /// Bracketing failed while searching for a divergence threshold.
    Bracket(String),
    /// Iterative eigenvalue estimation failed to settle.
    NonConverged(String),
    /// Malformed file content.
    Parse { line: usize, col: usize, msg: String },
    /// I/O failure (message only, to keep the type cloneable).
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            Error::CriticalPoint { a, z } => {
                write!(f, "Schwarzian undefined at critical point z={z} (a={a})")
            }
            Error::NoRoot { target, lo, hi } => {
                write!(f, "no solution of f(z)={target} in [{lo}, {hi}]")
            }
            Error::Inconclusive { needed, got } => {
                write!(f, "trajectory too short to classify: need {needed} points, got {got}")
            }
            Error::ConstructionFailed(msg) => write!(f, "certificate construction failed: {msg}"),
            Error::Diverged { step } => write!(f, "orbit diverged at step {step}"),
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::Orthogonality { i, j, dot, tol } => write!(
                f,
                "rows {i} and {j} are not orthogonal: |<x_i,x_j>| = {dot:e} > {tol:e}"
            ),
            Error::NoPositiveLabel => {
                write!(f, "every sample has a non-positive parameter coefficient")
            }
            Error::Bracket(msg) => write!(f, "bracketing failed: {msg}"),
            Error::NonConverged(msg) => write!(f, "iteration did not converge: {msg}"),
            Error::Parse { line, col, msg } => write!(f, "parse error at {line}:{col}: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
