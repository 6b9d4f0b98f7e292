//! Exact risk analysis of scalar threshold estimators under additive white
//! Gaussian noise.
//!
//! Each observation is `y = x + w` with `w ~ N(0, sigma_w^2)` and the
//! estimators act on every coefficient independently, so all quantities are
//! scalar functions of the true coefficient `x`:
//!
//! - [`estimators`]: hard threshold, piecewise-linear and semisoft maps.
//! - [`risk`]: closed-form bias, bias derivative and MSE, the unbiased and
//!   biased Cramér-Rao bounds, the oracle bound, and quadrature oracles.
//! - [`sequences`]: generalized-Gaussian decaying coefficient sequences with
//!   shared-energy calibration.
//! - [`optimizer`]: per-family minimization of the average MSE per symbol.
//! - [`monte_carlo`]: seeded simulation used as an end-to-end check.

pub mod error;
pub mod estimators;
pub mod monte_carlo;
pub mod optimizer;
pub mod quadrature;
pub mod risk;
pub mod rng;
pub mod sequences;
pub mod special;

pub use error::{Error, Result};
pub use estimators::{EstimatorParams, Family, HardThreshold, PiecewiseLinear, Semisoft};
pub use optimizer::{OptimizationResult, OptimizerConfig};
pub use risk::RiskPoint;
pub use sequences::{CalibratedEnsemble, DecayModel};
