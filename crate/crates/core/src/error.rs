use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown tableau `{name}` (expected one of: {expected})")]
    UnknownTableau { name: String, expected: String },

    #[error("invalid tableau: {0}")]
    InvalidTableau(String),

    #[error("tableau is not explicit in either sweep orientation")]
    NotExplicit,

    #[error("tableau is not symplectic (max |residual| = {0})")]
    NotSymplectic(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular field evaluation: |q| = {norm:e} is below {guard:e}")]
    Singularity { norm: f64, guard: f64 },

    #[error("integration failed at step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("error already below {0:e} at the largest step; shrink T or grow h")]
    Saturated(f64),

    #[error("stale tape: {0}")]
    StaleTape(String),

    #[error("parameters violate the restricted closed-form structure: {0}")]
    RestrictionViolated(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}: loss {loss:e} exceeds {limit:e}")]
    Diverged { epoch: usize, loss: f64, limit: f64 },

    #[error("quality gate failed: {0}")]
    QualityGate(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI: 1 for verification/divergence
    /// failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotSymplectic(_) | Error::Diverged { .. } | Error::Saturated(_) => 1,
            Error::StepFailed { source, .. } => source.exit_code(),
            Error::NonFinite(_) | Error::Singularity { .. } | Error::QualityGate(_) => 1,
            _ => 2,
        }
    }
}
