use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Snapshot of the inner QSDP solve when it gives up.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerFailure {
    pub iterations: usize,
    pub reduced_grad_norm: f64,
    pub directional: f64,
    pub merit_grad_norm: f64,
}

/// Snapshot of a backtracking search that ran past its cap.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchFailure {
    pub merit: f64,
    pub delta: f64,
    pub last_trial: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    NotTriangular(usize),
    EigenNoConvergence {
        sweeps: usize,
        off_norm: f64,
        norm: f64,
    },
    NonFinite {
        callback: &'static str,
    },
    InnerSolver(InnerFailure),
    LineSearch(LineSearchFailure),
    InvalidParameter(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension {
                what,
                expected,
                found,
            } => write!(f, "dimension mismatch in {what}: expected {expected}, found {found}"),
            Error::NotTriangular(len) => {
                write!(f, "vector length {len} is not a triangular number d(d+1)/2")
            }
            Error::EigenNoConvergence {
                sweeps,
                off_norm,
                norm,
            } => write!(
                f,
                "Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e}, matrix norm {norm:e})"
            ),
            Error::NonFinite { callback } => {
                write!(f, "non-finite value produced by `{callback}`")
            }
            Error::InnerSolver(d) => write!(
                f,
                "inner QSDP solve stopped after {} iterations without meeting the truncation tests (|grad q| = {:e}, <gradF, xi> = {:e}, |gradF| = {:e})",
                d.iterations, d.reduced_grad_norm, d.directional, d.merit_grad_norm
            ),
            Error::LineSearch(d) => write!(
                f,
                "line search exceeded {} trials (F = {:e}, delta = {:e}, last trial F = {:e})",
                d.trials, d.merit, d.delta, d.last_trial
            ),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            found,
        })
    }
}
