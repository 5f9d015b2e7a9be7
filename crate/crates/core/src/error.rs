use thiserror::Error;

/// Errors raised by the evaluators, solvers and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function being evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A family or configuration parameter is invalid.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A computation would exceed a configured resource cap.
    #[error("resource error: {0}")]
    Resource(String),

    /// A solver failed to bracket or converge.
    #[error("convergence error: {0}")]
    Convergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} = {x} is outside [0, 1]")))
    }
}
