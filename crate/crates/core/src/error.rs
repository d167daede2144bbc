use thiserror::Error;

use crate::pekar::PekarResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input rejected before any computation started.
    #[error("{module}: invalid `{param}`: {reason}")]
    Invalid {
        module: &'static str,
        param: String,
        reason: String,
    },

    #[error("grid: function does not decay at the boundary (|u| = {edge:.3e} at ±R); enlarge the domain")]
    DomainTooSmall { edge: f64 },

    #[error("{module}: {detail}")]
    Range { module: &'static str, detail: String },

    /// Pekar descent hit its iteration cap; the best iterate is kept.
    #[error("pekar: iteration limit reached after {} iterations (residual {:.3e})", best.iterations, best.el_residual)]
    IterationLimit { best: Box<PekarResult> },

    #[error("{module}: no convergence: {detail}")]
    NoConvergence { module: &'static str, detail: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(module: &'static str, param: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            module,
            param: param.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn no_convergence(module: &'static str, detail: impl Into<String>) -> Self {
        Error::NoConvergence {
            module,
            detail: detail.into(),
        }
    }

    /// Process exit code: 1 for validation problems, 2 for numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::IterationLimit { .. } | Error::NoConvergence { .. } => 2,
            _ => 1,
        }
    }
}
