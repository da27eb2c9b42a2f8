use thiserror::Error;

use crate::qbe::MixtureState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested state cannot be realised on the given grid.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("no convergence after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },

    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepUnderflow { t: f64, h: f64 },

    /// Occupation bounds could not be kept even at the minimum step. Carries
    /// the last accepted state.
    #[error("invariant violation at tau = {tau}: {detail}")]
    InvariantViolation {
        tau: f64,
        detail: String,
        state: Box<MixtureState>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::StepUnderflow { .. } | Error::InvariantViolation { .. }
        )
    }
}
