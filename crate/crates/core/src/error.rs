use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resonant denominator {denominator:.3e} (detuning {detuning:.3e}): perturbative coupling is undefined")]
    Resonance { denominator: f64, detuning: f64 },

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("infeasible geometry: {0}")]
    Infeasible(String),

    #[error("integration failed at t = {t:.6e}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("eigensolver did not converge after {iterations} iterations (active window {lo}..={hi})")]
    NoConvergence { iterations: usize, lo: usize, hi: usize },

    #[error("degenerate spectrum: {0}")]
    Degenerate(String),

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("adiabatic elimination invalid: scale separation {ratio:.2} below required {required:.2}")]
    EliminationInvalid { ratio: f64, required: f64 },

    #[error("chiral symmetry violated by {0:.3e}")]
    ChiralViolation(f64),

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    /// True for failures caused by the input document rather than the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Json(_) | Error::Infeasible(_))
    }
}
