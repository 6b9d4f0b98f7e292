//! Pointwise input/output maps of the three estimator families.
//!
//! Parameters are stored in absolute amplitude units (the same units as the
//! observation). At `|y| = T` every family takes the pass-through branch.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_sigma, Error, Result};

fn check_threshold(name: &str, t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and >= 0, got {t}")))
    }
}

/// `0` for `|y| < T`, `y` otherwise. `T = 0` is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardThreshold {
    t: f64,
}

impl HardThreshold {
    pub fn new(t: f64) -> Result<Self> {
        check_threshold("T", t)?;
        Ok(Self { t })
    }

    pub fn threshold(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        if y.abs() < self.t {
            0.0
        } else {
            y
        }
    }
}

/// `alpha * y` inside the dead zone, `y` outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    alpha: f64,
    t: f64,
}

impl PiecewiseLinear {
    pub fn new(alpha: f64, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::domain(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        check_threshold("T", t)?;
        Ok(Self { alpha, t })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn threshold(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        if y.abs() < self.t {
            self.alpha * y
        } else {
            y
        }
    }
}

/// Semisoft shrinkage: dead zone `|y| < T0`, a ramp of slope
/// `beta = T / (T - T0)` on `T0 <= |y| < T`, identity beyond.
///
/// `T0 == T` is hard thresholding at `T`; the slope is never formed then.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Semisoft {
    t0: f64,
    t: f64,
}

impl Semisoft {
    pub fn new(t0: f64, t: f64) -> Result<Self> {
        check_threshold("T0", t0)?;
        check_threshold("T", t)?;
        if t0 > t {
            return Err(Error::domain(format!("need T0 <= T, got T0={t0}, T={t}")));
        }
        Ok(Self { t0, t })
    }

    pub fn inner(&self) -> f64 {
        self.t0
    }

    pub fn threshold(&self) -> f64 {
        self.t
    }

    /// Ramp slope, `None` when the estimator is hard thresholding.
    pub fn beta(&self) -> Option<f64> {
        (self.t0 < self.t).then(|| self.t / (self.t - self.t0))
    }

    pub fn is_hard_threshold(&self) -> bool {
        self.t0 == self.t
    }

    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        let a = y.abs();
        if a >= self.t {
            y
        } else if a < self.t0 {
            0.0
        } else {
            // t0 <= |y| < t implies t0 < t, so the slope is finite.
            let beta = self.t / (self.t - self.t0);
            beta * (y - y.signum() * self.t0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "ht")]
    HardThreshold,
    #[serde(rename = "pl")]
    PiecewiseLinear,
    #[serde(rename = "ss")]
    Semisoft,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::HardThreshold, Family::PiecewiseLinear, Family::Semisoft];

    pub fn tag(self) -> &'static str {
        match self {
            Family::HardThreshold => "ht",
            Family::PiecewiseLinear => "pl",
            Family::Semisoft => "ss",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ht" | "hard" => Ok(Family::HardThreshold),
            "pl" | "piecewise-linear" => Ok(Family::PiecewiseLinear),
            "ss" | "semisoft" => Ok(Family::Semisoft),
            other => Err(Error::domain(format!("unknown estimator family `{other}`"))),
        }
    }
}

/// Tagged parameter set for one of the three families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum EstimatorParams {
    #[serde(rename = "ht")]
    HardThreshold(HardThreshold),
    #[serde(rename = "pl")]
    PiecewiseLinear(PiecewiseLinear),
    #[serde(rename = "ss")]
    Semisoft(Semisoft),
}

impl EstimatorParams {
    pub fn hard(t: f64) -> Result<Self> {
        HardThreshold::new(t).map(Self::HardThreshold)
    }

    pub fn piecewise_linear(alpha: f64, t: f64) -> Result<Self> {
        PiecewiseLinear::new(alpha, t).map(Self::PiecewiseLinear)
    }

    pub fn semisoft(t0: f64, t: f64) -> Result<Self> {
        Semisoft::new(t0, t).map(Self::Semisoft)
    }

    pub fn family(&self) -> Family {
        match self {
            Self::HardThreshold(_) => Family::HardThreshold,
            Self::PiecewiseLinear(_) => Family::PiecewiseLinear,
            Self::Semisoft(_) => Family::Semisoft,
        }
    }

    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        match self {
            Self::HardThreshold(p) => p.apply(y),
            Self::PiecewiseLinear(p) => p.apply(y),
            Self::Semisoft(p) => p.apply(y),
        }
    }

    /// Points where the map is discontinuous or kinked.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = match self {
            Self::HardThreshold(p) => vec![-p.t, p.t],
            Self::PiecewiseLinear(p) => vec![-p.t, p.t],
            Self::Semisoft(p) => vec![-p.t, -p.t0, p.t0, p.t],
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// The outer threshold `T` of any family.
    pub fn threshold(&self) -> f64 {
        match self {
            Self::HardThreshold(p) => p.t,
            Self::PiecewiseLinear(p) => p.t,
            Self::Semisoft(p) => p.t,
        }
    }

    /// Same estimator with every amplitude parameter multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match *self {
            Self::HardThreshold(p) => Self::hard(p.t * factor),
            Self::PiecewiseLinear(p) => Self::piecewise_linear(p.alpha, p.t * factor),
            Self::Semisoft(p) => Self::semisoft(p.t0 * factor, p.t * factor),
        }
    }
}

/// One noisy coefficient `y = x + w`, with the noise level that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: f64,
    pub sigma_w: f64,
}

impl Observation {
    pub fn new(y: f64, sigma_w: f64) -> Result<Self> {
        check_sigma(sigma_w)?;
        Ok(Self { y, sigma_w })
    }
}

pub fn apply_hard_threshold(y: f64, p: &HardThreshold) -> f64 {
    p.apply(y)
}

pub fn apply_piecewise_linear(y: f64, p: &PiecewiseLinear) -> f64 {
    p.apply(y)
}

pub fn apply_semisoft(y: f64, p: &Semisoft) -> f64 {
    p.apply(y)
}

/// Applies the estimator to every coefficient independently.
///
/// `sigma_w` is validated but does not enter the maps, whose parameters are
/// already in absolute units.
pub fn apply_to_vector(y: &[f64], estimator: &EstimatorParams, sigma_w: f64) -> Result<Vec<f64>> {
    check_sigma(sigma_w)?;
    if y.is_empty() {
        return Err(Error::Empty("observation vector"));
    }
    Ok(y.iter().map(|&v| estimator.apply(v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hard_threshold_examples() {
        let p = HardThreshold::new(2.0).unwrap();
        assert_eq!(apply_hard_threshold(1.5, &p), 0.0);
        assert_eq!(apply_hard_threshold(2.5, &p), 2.5);
        assert_eq!(apply_hard_threshold(-3.0, &p), -3.0);
        assert_eq!(apply_hard_threshold(2.0, &p), 2.0);
        assert_eq!(apply_hard_threshold(-2.0, &p), -2.0);
    }

    #[test]
    fn piecewise_linear_examples() {
        let pl = |a| PiecewiseLinear::new(a, 2.0).unwrap();
        assert_eq!(apply_piecewise_linear(1.0, &pl(0.5)), 0.5);
        assert_eq!(apply_piecewise_linear(1.0, &pl(1.0)), 1.0);
        assert_eq!(apply_piecewise_linear(1.0, &pl(0.0)), 0.0);
    }

    #[test]
    fn semisoft_examples() {
        let p = Semisoft::new(1.0, 2.0).unwrap();
        assert_eq!(p.beta(), Some(2.0));
        assert_eq!(apply_semisoft(0.5, &p), 0.0);
        assert_eq!(apply_semisoft(1.5, &p), 1.0);
        assert_eq!(apply_semisoft(2.0, &p), 2.0);
        assert_eq!(apply_semisoft(1.0, &p), 0.0);
        assert_eq!(apply_semisoft(-1.5, &p), -1.0);
    }

    #[test]
    fn semisoft_equal_thresholds_is_hard() {
        let p = Semisoft::new(2.0, 2.0).unwrap();
        assert!(p.is_hard_threshold());
        assert_eq!(p.beta(), None);
        let ht = HardThreshold::new(2.0).unwrap();
        for y in [-3.0, -2.0, -1.999, 0.0, 1.0, 2.0, 2.5] {
            assert_eq!(p.apply(y), ht.apply(y));
        }
    }

    #[test]
    fn invalid_params() {
        assert!(HardThreshold::new(-1.0).is_err());
        assert!(HardThreshold::new(f64::NAN).is_err());
        assert!(PiecewiseLinear::new(1.5, 1.0).is_err());
        assert!(PiecewiseLinear::new(-0.1, 1.0).is_err());
        assert!(Semisoft::new(3.0, 2.0).is_err());
        assert!(Semisoft::new(-0.5, 2.0).is_err());
        assert!(Observation::new(1.0, 0.0).is_err());
    }

    #[test]
    fn vector_application() {
        let ht = EstimatorParams::hard(2.0).unwrap();
        assert_eq!(apply_to_vector(&[1.5, 2.5], &ht, 1.0).unwrap(), vec![0.0, 2.5]);
        assert!(matches!(apply_to_vector(&[], &ht, 1.0), Err(Error::Empty(_))));
        let id = EstimatorParams::piecewise_linear(1.0, 5.0).unwrap();
        assert_eq!(
            apply_to_vector(&[-3.0, 0.0, 3.0], &id, 1.0).unwrap(),
            vec![-3.0, 0.0, 3.0]
        );
    }

    #[test]
    fn family_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.tag().parse::<Family>().unwrap(), f);
        }
        let json = serde_json::to_string(&EstimatorParams::semisoft(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(json, r#"{"family":"ss","t0":1.0,"t":2.0}"#);
    }

    fn any_estimator() -> impl Strategy<Value = EstimatorParams> {
        prop_oneof![
            (0.0f64..5.0).prop_map(|t| EstimatorParams::hard(t).unwrap()),
            (0.0f64..=1.0, 0.0f64..5.0).prop_map(|(a, t)| EstimatorParams::piecewise_linear(a, t).unwrap()),
            (0.0f64..=1.0, 0.0f64..5.0).prop_map(|(r, t)| EstimatorParams::semisoft(r * t, t).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn maps_are_odd(e in any_estimator(), y in -10.0f64..10.0) {
            prop_assert_eq!(e.apply(-y), -e.apply(y));
        }

        #[test]
        fn pl_alpha_zero_is_hard(t in 0.0f64..5.0, y in -10.0f64..10.0) {
            let pl = PiecewiseLinear::new(0.0, t).unwrap();
            let ht = HardThreshold::new(t).unwrap();
            prop_assert_eq!(pl.apply(y), ht.apply(y));
        }

        #[test]
        fn magnitude_bounds(e in any_estimator(), y in -10.0f64..10.0) {
            let out = e.apply(y).abs();
            match e {
                EstimatorParams::Semisoft(s) => {
                    let beta = s.beta().unwrap_or(1.0);
                    prop_assert!(out <= y.abs().max(beta * y.abs()) * (1.0 + 1e-15));
                }
                _ => prop_assert!(out <= y.abs()),
            }
        }

        #[test]
        fn semisoft_lipschitz(t0 in 0.0f64..3.0, gap in 0.05f64..3.0, y in -8.0f64..8.0, eps in 0.0f64..1e-3) {
            let s = Semisoft::new(t0, t0 + gap).unwrap();
            let beta = s.beta().unwrap();
            let d = (s.apply(y + eps) - s.apply(y)).abs();
            prop_assert!(d <= beta * eps * (1.0 + 1e-9) + 1e-12);
        }
    }
}
