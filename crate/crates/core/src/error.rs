use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(
        "quadrature did not converge on [{lower}, {upper}]: estimate {estimate:e}, \
         error {error:e} after {intervals} subintervals"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

/// Rejects non-positive or non-finite noise levels.
pub(crate) fn check_sigma(sigma_w: f64) -> Result<()> {
    if sigma_w.is_finite() && sigma_w > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("sigma_w must be finite and > 0, got {sigma_w}")))
    }
}

pub(crate) fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}
