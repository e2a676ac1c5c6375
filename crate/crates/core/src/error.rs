use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("truncation error: tail mass {tail:.3e} exceeds {limit:.1e} at n_max = {n_max}")]
    Truncation { tail: f64, limit: f64, n_max: usize },

    #[error("quadrature failed: error estimate {achieved:.3e} above tolerance {requested:.3e} after {evals} evaluations")]
    Quadrature {
        achieved: f64,
        requested: f64,
        evals: usize,
    },

    #[error("insecure channel: p_e - p_err = {gap:.4e} is not positive")]
    InsecureChannel { gap: f64 },

    #[error("numerical error: {0}")]
    Numerics(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
