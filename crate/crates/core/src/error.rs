use thiserror::Error;

use crate::tomography::ReconstructedProcess;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("coherence factor magnitude {0} exceeds 1")]
    InvalidCoherence(f64),

    #[error("mixing probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),

    #[error("port {port} is reached with probability {probability:e}; its conditional channel is undefined")]
    UndefinedPortChannel { port: usize, probability: f64 },

    #[error("degenerate parameterization: {0}")]
    Degenerate(String),

    #[error("maximum-likelihood reconstruction did not converge after {restarts} restarts (best cost {})", best.cost)]
    NonConvergence {
        restarts: usize,
        best: Box<ReconstructedProcess>,
    },

    #[error("correlation undefined: all coincidence counts are zero")]
    UndefinedCorrelation,

    /// `set` is `None` for the observed data.
    #[error("estimator failed on {}: {message}", match set { Some(k) => format!("bootstrap set {k}"), None => "the observed data".to_string() })]
    Estimator { set: Option<usize>, message: String },

    #[error("Poisson mean must be finite and non-negative, got {0}")]
    NegativeMean(f64),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
