//! Scalar special functions behind the closed-form risk expressions.
//!
//! Note the tail convention: [`gauss_q`] integrates `e^{-t^2}`, not the
//! standard normal density, so `gauss_q(x) = erfc(x) / 2` and the standard
//! normal tail at `z` is `gauss_q(z / sqrt(2))`.

use std::f64::consts::FRAC_2_SQRT_PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_sigma, Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::domain(format!("probability out of [0, 1]: {value}")))
        }
    }

    /// Clamps rounding spill outside `[0, 1]`.
    pub(crate) fn saturating(value: f64) -> Self {
        Self(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// `pi^{-1/2} * int_x^inf e^{-t^2} dt`, i.e. `erfc(x) / 2`.
///
/// Infinite arguments map to their limits; NaN is rejected.
pub fn gauss_q(x: f64) -> Result<Probability> {
    if x.is_nan() {
        return Err(Error::domain("gauss_q of NaN"));
    }
    Ok(Probability::saturating(q(x)))
}

/// Regularized lower incomplete gamma of shape 3/2:
/// `(2/sqrt(pi)) * int_0^x t^{1/2} e^{-t} dt`.
pub fn gamma_inc_3half(x: f64) -> Result<Probability> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("gamma_inc_3half needs x >= 0, got {x}")));
    }
    Ok(Probability::saturating(gamma_3half(x)))
}

/// Zero-mean Gaussian density with standard deviation `sigma`.
pub fn gauss_pdf(y: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if y.is_nan() {
        return Err(Error::domain("gauss_pdf of NaN"));
    }
    Ok(pdf(y, sigma))
}

// Unchecked kernels used on hot paths once inputs are validated.

#[inline]
pub(crate) fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x)
}

/// Exact for shape 3/2: `erf(sqrt x) - 2 sqrt(x/pi) e^{-x}`.
#[inline]
pub(crate) fn gamma_3half(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    let r = x.sqrt();
    libm::erf(r) - FRAC_2_SQRT_PI * r * (-x).exp()
}

/// `sgn(z) * gamma_3half(z^2)`, the signed form used by the HT MSE.
#[inline]
pub(crate) fn signed_gamma_3half(z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else {
        z.signum() * gamma_3half(z * z)
    }
}

#[inline]
pub(crate) fn pdf(y: f64, sigma: f64) -> f64 {
    let t = y / sigma;
    FRAC_1_SQRT_2PI / sigma * (-0.5 * t * t).exp()
}

/// `e^{-x^2}`; underflows to exactly 0 past |x| ~ 27.
#[inline]
pub(crate) fn gauss_kernel(x: f64) -> f64 {
    (-x * x).exp()
}

pub(crate) const SQRT_PI: f64 = 1.772_453_850_905_516;
pub(crate) const SQRT_2PI: f64 = 2.506_628_274_631_000_3;
