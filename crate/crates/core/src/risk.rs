//! Closed-form bias, bias derivative and mean-square error of the three
//! estimator families as functions of the true coefficient `x`, together
//! with the Cramér-Rao and oracle bounds and quadrature oracles.
//!
//! Everything is expressed through the standardized arguments
//! `x_S = (x + T)/(sqrt(2) sigma)`, `x_D = (x - T)/(sqrt(2) sigma)` and the
//! analogous `xi_S`, `xi_D` built from the semisoft inner threshold `T0`,
//! together with `Q(z) = erfc(z)/2` and the shape-3/2 regularized gamma.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_sigma, Error, Result};
use crate::estimators::{EstimatorParams, HardThreshold, PiecewiseLinear, Semisoft};
use crate::quadrature::{gauss_legendre, integrate, QuadratureOptions};
use crate::special::{gauss_kernel, pdf, q, signed_gamma_3half, SQRT_2PI, SQRT_PI};

/// Below this ramp width (in units of sigma) the semisoft ramp integrals
/// are evaluated with Gauss-Legendre; the Appendix closed form cancels as
/// `beta^2 * eps`.
const SHORT_RAMP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizedArgs {
    pub x_s: f64,
    pub x_d: f64,
    pub xi_s: f64,
    pub xi_d: f64,
}

impl StandardizedArgs {
    pub fn new(x: f64, t0: f64, t: f64, sigma_w: f64) -> Self {
        let k = SQRT_2 * sigma_w;
        Self {
            x_s: (x + t) / k,
            x_d: (x - t) / k,
            xi_s: (x + t0) / k,
            xi_d: (x - t0) / k,
        }
    }
}

/// Per-coefficient Fisher information `sigma_w^{-2}` of the AWGN model; the
/// N-vector information matrix is this value times the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherInfo(f64);

impl FisherInfo {
    pub fn awgn(sigma_w: f64) -> Result<Self> {
        check_sigma(sigma_w)?;
        Ok(Self(1.0 / (sigma_w * sigma_w)))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Inverse information, the unbiased bound per coefficient.
    pub fn inverse(self) -> f64 {
        1.0 / self.0
    }
}

/// Everything plotted against the true coefficient at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub x: f64,
    pub bias: f64,
    pub bias_deriv: f64,
    pub mse: f64,
    pub crb_unbiased: f64,
    pub crb_biased: f64,
    pub oracle: f64,
}

// ---------------------------------------------------------------------------
// hard thresholding

pub(crate) fn ht_bias(x: f64, t: f64, s: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let a = StandardizedArgs::new(x, 0.0, t, s);
    s * (gauss_kernel(a.x_d) - gauss_kernel(a.x_s)) / SQRT_2PI - x * (q(a.x_d) - q(a.x_s))
}

/// `T (p(T - x) + p(T + x)) - P(|y| < T)`.
pub(crate) fn ht_bias_deriv(x: f64, t: f64, s: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let a = StandardizedArgs::new(x, 0.0, t, s);
    t / (SQRT_2PI * s) * (gauss_kernel(a.x_d) + gauss_kernel(a.x_s)) - (q(a.x_d) - q(a.x_s))
}

pub(crate) fn ht_mse(x: f64, t: f64, s: f64) -> f64 {
    if t == 0.0 {
        return s * s;
    }
    let a = StandardizedArgs::new(x, 0.0, t, s);
    let r = x / s;
    s * s * (1.0 + r * r * (q(a.x_d) - q(a.x_s)) + 0.5 * (signed_gamma_3half(a.x_d) - signed_gamma_3half(a.x_s)))
}

/// `int_{-T}^{T} y^2 p_w(y - x) dy` from Gaussian moments over the window
/// `w in [-T - x, T - x]`.
pub(crate) fn dead_zone_second_moment(x: f64, t: f64, s: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let a = StandardizedArgs::new(x, 0.0, t, s);
    let mass = q(a.x_d) - q(a.x_s);
    let first = s / SQRT_2PI * (gauss_kernel(a.x_s) - gauss_kernel(a.x_d));
    let second = 0.5 * s * s * (signed_gamma_3half(a.x_s) - signed_gamma_3half(a.x_d));
    second + 2.0 * x * first + x * x * mass
}

// ---------------------------------------------------------------------------
// piecewise linear

pub(crate) fn pl_bias(x: f64, alpha: f64, t: f64, s: f64) -> f64 {
    (1.0 - alpha) * ht_bias(x, t, s)
}

pub(crate) fn pl_bias_deriv(x: f64, alpha: f64, t: f64, s: f64) -> f64 {
    (1.0 - alpha) * ht_bias_deriv(x, t, s)
}

pub(crate) fn pl_mse(x: f64, alpha: f64, t: f64, s: f64) -> f64 {
    if alpha == 0.0 {
        return ht_mse(x, t, s);
    }
    s * s - (1.0 - alpha) * 2.0 * x * ht_bias(x, t, s) - (1.0 - alpha * alpha) * dead_zone_second_moment(x, t, s)
}

// ---------------------------------------------------------------------------
// semisoft

fn is_short_ramp(t0: f64, t: f64, s: f64) -> bool {
    t - t0 < SHORT_RAMP * s
}

pub(crate) fn ss_bias(x: f64, t0: f64, t: f64, s: f64) -> f64 {
    if t0 == t {
        return ht_bias(x, t, s);
    }
    let beta = t / (t - t0);
    if is_short_ramp(t0, t, s) {
        let ramp = gauss_legendre(|y| (y - t0) * (pdf(y - x, s) - pdf(y + x, s)), t0, t);
        return ht_bias(x, t, s) + beta * ramp;
    }
    let a = StandardizedArgs::new(x, t0, t, s);
    beta * ht_bias(x, t0, s)
        - (beta - 1.0) * ht_bias(x, t, s)
        - beta * t0 * (q(a.x_d) - q(a.xi_d) + q(a.x_s) - q(a.xi_s))
}

pub(crate) fn ss_bias_deriv(x: f64, t0: f64, t: f64, s: f64) -> f64 {
    if t0 == t {
        return ht_bias_deriv(x, t, s);
    }
    let beta = t / (t - t0);
    if is_short_ramp(t0, t, s) {
        let s2 = s * s;
        let ramp = gauss_legendre(
            |y| (y - t0) * ((y - x) * pdf(y - x, s) + (y + x) * pdf(y + x, s)) / s2,
            t0,
            t,
        );
        return ht_bias_deriv(x, t, s) + beta * ramp;
    }
    let a = StandardizedArgs::new(x, t0, t, s);
    let kernels = gauss_kernel(a.x_d) - gauss_kernel(a.xi_d) + gauss_kernel(a.x_s) - gauss_kernel(a.xi_s);
    beta * ht_bias_deriv(x, t0, s) - (beta - 1.0) * ht_bias_deriv(x, t, s) + beta * t0 / (SQRT_2PI * s) * kernels
}

/// `int_{T0}^{T} (beta^2 (y - T0)^2 - 2 x beta (y - T0)) p_w(y - x) dy`.
pub(crate) fn ss_f(x: f64, t0: f64, t: f64, s: f64) -> f64 {
    if t0 == t {
        return 0.0;
    }
    let beta = t / (t - t0);
    if is_short_ramp(t0, t, s) {
        return gauss_legendre(
            |y| {
                let r = beta * (y - t0);
                (r * r - 2.0 * x * r) * pdf(y - x, s)
            },
            t0,
            t,
        );
    }
    let a = StandardizedArgs::new(x, t0, t, s);
    let c = a.xi_s - SQRT_2 * t0 * x / (s * t);
    let exp_terms = (a.x_d * (1.0 - 2.0 * t0 / t) * gauss_kernel(a.x_d) - c * gauss_kernel(a.xi_d)) / SQRT_PI;
    let mass_term = (1.0 - 2.0 * a.xi_d * c) * (q(a.x_d) - q(a.xi_d));
    beta * beta * s * s * (exp_terms + mass_term)
}

pub(crate) fn ss_mse(x: f64, t0: f64, t: f64, s: f64) -> f64 {
    if t0 == t {
        return ht_mse(x, t, s);
    }
    ht_mse(x, t, s) + ss_f(x, t0, t, s) + ss_f(-x, t0, t, s)
}

// ---------------------------------------------------------------------------
// checked public surface

fn check_point(x: f64, sigma_w: f64) -> Result<()> {
    check_sigma(sigma_w)?;
    check_finite("x", x)
}

fn check_t(t: f64) -> Result<()> {
    HardThreshold::new(t).map(|_| ())
}

pub fn bias_ht(x: f64, t: f64, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    check_t(t)?;
    Ok(ht_bias(x, t, sigma_w))
}

pub fn bias_deriv_ht(x: f64, t: f64, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    check_t(t)?;
    Ok(ht_bias_deriv(x, t, sigma_w))
}

pub fn mse_ht(x: f64, t: f64, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    check_t(t)?;
    Ok(ht_mse(x, t, sigma_w))
}

pub fn bias_pl(x: f64, p: &PiecewiseLinear, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    Ok(pl_bias(x, p.alpha(), p.threshold(), sigma_w))
}

pub fn mse_pl(x: f64, p: &PiecewiseLinear, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    Ok(pl_mse(x, p.alpha(), p.threshold(), sigma_w))
}

pub fn bias_ss(x: f64, p: &Semisoft, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    Ok(ss_bias(x, p.inner(), p.threshold(), sigma_w))
}

/// Ramp correction to the HT MSE; identically zero when `T0 == T`.
pub fn f_ss(x: f64, p: &Semisoft, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    Ok(ss_f(x, p.inner(), p.threshold(), sigma_w))
}

pub fn mse_ss(x: f64, p: &Semisoft, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    Ok(ss_mse(x, p.inner(), p.threshold(), sigma_w))
}

/// Per-coefficient unbiased bound `sigma_w^2`.
pub fn crb_unbiased(sigma_w: f64) -> Result<f64> {
    Ok(FisherInfo::awgn(sigma_w)?.inverse())
}

/// Unbiased bound on the total squared error of `n` coefficients.
pub fn crb_unbiased_total(n: usize, sigma_w: f64) -> Result<f64> {
    Ok(n as f64 * crb_unbiased(sigma_w)?)
}

/// Scalar biased bound `b^2 + sigma_w^2 (1 + b')^2`.
pub fn crb_biased_scalar(bias: f64, bias_deriv: f64, sigma_w: f64) -> Result<f64> {
    check_sigma(sigma_w)?;
    check_finite("bias", bias)?;
    check_finite("bias derivative", bias_deriv)?;
    let g = 1.0 + bias_deriv;
    Ok(bias * bias + sigma_w * sigma_w * g * g)
}

/// Gain `x^2 / (x^2 + sigma_w^2)` of the best scalar estimator `a y` given `x`.
pub fn oracle_gain(x: f64, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    Ok(x * x / (x * x + sigma_w * sigma_w))
}

/// Minimum MSE over scalar gains, `sigma_w^2 x^2 / (x^2 + sigma_w^2)`.
pub fn oracle_bound(x: f64, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    let s2 = sigma_w * sigma_w;
    Ok(s2 * x * x / (x * x + s2))
}

// ---------------------------------------------------------------------------
// dispatch over families

/// Bias in absolute units. Inputs are assumed validated.
pub(crate) fn bias_unchecked(e: &EstimatorParams, x: f64, s: f64) -> f64 {
    match e {
        EstimatorParams::HardThreshold(p) => ht_bias(x, p.threshold(), s),
        EstimatorParams::PiecewiseLinear(p) => pl_bias(x, p.alpha(), p.threshold(), s),
        EstimatorParams::Semisoft(p) => ss_bias(x, p.inner(), p.threshold(), s),
    }
}

pub(crate) fn bias_deriv_unchecked(e: &EstimatorParams, x: f64, s: f64) -> f64 {
    match e {
        EstimatorParams::HardThreshold(p) => ht_bias_deriv(x, p.threshold(), s),
        EstimatorParams::PiecewiseLinear(p) => pl_bias_deriv(x, p.alpha(), p.threshold(), s),
        EstimatorParams::Semisoft(p) => ss_bias_deriv(x, p.inner(), p.threshold(), s),
    }
}

pub(crate) fn mse_unchecked(e: &EstimatorParams, x: f64, s: f64) -> f64 {
    match e {
        EstimatorParams::HardThreshold(p) => ht_mse(x, p.threshold(), s),
        EstimatorParams::PiecewiseLinear(p) => pl_mse(x, p.alpha(), p.threshold(), s),
        EstimatorParams::Semisoft(p) => ss_mse(x, p.inner(), p.threshold(), s),
    }
}

pub fn bias(e: &EstimatorParams, x: f64, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    Ok(bias_unchecked(e, x, sigma_w))
}

pub fn bias_deriv(e: &EstimatorParams, x: f64, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    Ok(bias_deriv_unchecked(e, x, sigma_w))
}

pub fn mse(e: &EstimatorParams, x: f64, sigma_w: f64) -> Result<f64> {
    check_point(x, sigma_w)?;
    Ok(mse_unchecked(e, x, sigma_w))
}

/// The two limiting estimators, kept explicit so tests need not emulate
/// them with extreme thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degenerate {
    /// `x_hat = y`, the maximum-likelihood estimator.
    Identity,
    /// `x_hat = 0`, the limit `T -> inf`.
    AlwaysZero,
}

impl Degenerate {
    pub fn apply(self, y: f64) -> f64 {
        match self {
            Degenerate::Identity => y,
            Degenerate::AlwaysZero => 0.0,
        }
    }

    pub fn bias(self, x: f64) -> f64 {
        match self {
            Degenerate::Identity => 0.0,
            Degenerate::AlwaysZero => -x,
        }
    }

    pub fn bias_deriv(self) -> f64 {
        match self {
            Degenerate::Identity => 0.0,
            Degenerate::AlwaysZero => -1.0,
        }
    }

    pub fn mse(self, x: f64, sigma_w: f64) -> f64 {
        match self {
            Degenerate::Identity => sigma_w * sigma_w,
            Degenerate::AlwaysZero => x * x,
        }
    }
}

fn point(e: &EstimatorParams, x: f64, s: f64) -> RiskPoint {
    let b = bias_unchecked(e, x, s);
    let db = bias_deriv_unchecked(e, x, s);
    let g = 1.0 + db;
    RiskPoint {
        x,
        bias: b,
        bias_deriv: db,
        mse: mse_unchecked(e, x, s),
        crb_unbiased: s * s,
        crb_biased: b * b + s * s * g * g,
        oracle: s * s * x * x / (x * x + s * s),
    }
}

/// Evaluates every closed-form quantity on a sorted grid of true values.
pub fn risk_curve(e: &EstimatorParams, sigma_w: f64, x_grid: &[f64]) -> Result<Vec<RiskPoint>> {
    check_sigma(sigma_w)?;
    if x_grid.is_empty() {
        return Err(Error::Empty("x grid"));
    }
    for &x in x_grid {
        check_finite("x", x)?;
    }
    if x_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("x grid must be sorted ascending"));
    }

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok(x_grid.par_iter().map(|&x| point(e, x, sigma_w)).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(x_grid.iter().map(|&x| point(e, x, sigma_w)).collect())
    }
}

// ---------------------------------------------------------------------------
// quadrature oracles

fn oracle_expectation<G: Fn(f64) -> f64>(e: &EstimatorParams, x: f64, s: f64, tol: f64, g: G) -> Result<f64> {
    check_point(x, s)?;
    let opts = QuadratureOptions {
        abs_tol: tol,
        rel_tol: 0.0,
        ..QuadratureOptions::default()
    };
    let est = integrate(
        |y| g(e.apply(y) - x) * pdf(y - x, s),
        x - 12.0 * s,
        x + 12.0 * s,
        &e.breakpoints(),
        &opts,
    )?;
    Ok(est.value)
}

/// `E[x_hat(y)] - x` by adaptive quadrature of the estimator map.
pub fn quadrature_oracle_bias(e: &EstimatorParams, x: f64, sigma_w: f64) -> Result<f64> {
    oracle_expectation(e, x, sigma_w, 1e-12 * sigma_w, |err| err)
}

/// `E[(x_hat(y) - x)^2]` by adaptive quadrature of the estimator map.
pub fn quadrature_oracle_mse(e: &EstimatorParams, x: f64, sigma_w: f64) -> Result<f64> {
    oracle_expectation(e, x, sigma_w, 1e-12 * sigma_w * sigma_w, |err| err * err)
}
