use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what} at index {index}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("offline optimum cost is not positive for instance {index} (cost {cost})")]
    DegenerateInstance { index: usize, cost: f64 },

    #[error("expert action infeasible at step {t}: slack {slack:e}")]
    ExpertInfeasible { t: usize, slack: f64 },

    #[error("dual bisection failed to bracket the multiplier at step {t}")]
    NonBracketing { t: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("ROBD needs the current context at every step; schedule has delay q={q}")]
    NeedsCurrentContext { q: usize },

    #[error("training diverged at epoch {epoch}: loss {loss:e}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ExpertInfeasible { .. }
                | Error::NonBracketing { .. }
                | Error::NonConvergence { .. }
                | Error::Divergence { .. }
                | Error::DegenerateInstance { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse { .. } | Error::Csv(_))
    }
}
