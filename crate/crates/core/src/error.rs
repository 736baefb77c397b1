use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum FbpError {
    /// An argument or configuration value violated its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numerical routine produced or received a non-finite value.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A series or iterative scheme hit its iteration cap.
    #[error("{what} did not converge within {limit} iterations")]
    NoConvergence { what: &'static str, limit: usize },

    /// The result would overflow `f64`.
    #[error("overflow evaluating {0}")]
    Overflow(&'static str),

    /// A simulated path exceeded the event cap before reaching its horizon.
    #[error("path truncated after {events} events at time {time} (horizon {horizon})")]
    EventCapExceeded {
        events: usize,
        time: f64,
        horizon: f64,
    },

    /// A variance formula came out clearly negative, beyond roundoff.
    #[error("variance {value} at t={t} is negative beyond roundoff")]
    NegativeVariance { value: f64, t: f64 },

    /// A Monte Carlo study had too many replicates fail to converge.
    #[error("{failed} of {total} replicates failed to converge")]
    StudyFailed { failed: usize, total: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl FbpError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FbpError::InvalidParameter(msg.into())
    }

    /// Process exit code for this error: 1 validation, 2 computation, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            FbpError::InvalidParameter(_) | FbpError::Parse(_) => 1,
            FbpError::NonFinite(_)
            | FbpError::NoConvergence { .. }
            | FbpError::Overflow(_)
            | FbpError::EventCapExceeded { .. }
            | FbpError::NegativeVariance { .. }
            | FbpError::StudyFailed { .. } => 2,
            FbpError::Io(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, FbpError>;
