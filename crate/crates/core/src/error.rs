use thiserror::Error;

/// Errors produced by the value, boundary, numerics and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature on [{a}, {b}] did not reach tolerance {tolerance:e} (estimate {estimate:e})"
    )]
    Tolerance {
        a: f64,
        b: f64,
        tolerance: f64,
        estimate: f64,
    },

    #[error("root is not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("root finder did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("all {0} paths reached the step cap")]
    AllPathsCapped(u64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
