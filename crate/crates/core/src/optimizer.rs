//! Minimization of the average MSE per symbol over each family's free
//! parameters: an exhaustive coarse grid followed by compass search.
//!
//! The objective is the exact closed form, so runs are deterministic. Among
//! equal objective values the less aggressive estimator wins: smaller `T`,
//! then smaller `T0`, then larger `alpha`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{check_sigma, Error, Result};
use crate::estimators::{EstimatorParams, Family};
use crate::risk::mse_unchecked;
use crate::sequences::CalibratedEnsemble;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Upper end of the threshold range, in units of sigma_w.
    pub t_max: f64,
    /// Grid points on `[0, t_max]` for `T` and `T0`.
    pub t_points: usize,
    /// Grid points on `[0, 1]` for `alpha`.
    pub alpha_points: usize,
    /// Compass search stops once the threshold step drops below this, in
    /// units of sigma_w.
    pub min_step: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            t_max: 12.0,
            t_points: 121,
            alpha_points: 51,
            min_step: 1e-6,
            max_iterations: 100_000,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::domain(format!("t_max must be > 0, got {}", self.t_max)));
        }
        if self.t_points < 2 || self.alpha_points < 2 {
            return Err(Error::domain("optimizer grids need at least 2 points"));
        }
        if self.min_step.is_nan() || self.min_step <= 0.0 {
            return Err(Error::domain("min_step must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub estimator_kind: Family,
    pub params: EstimatorParams,
    pub avg_mse_per_symbol: f64,
    pub evaluations: usize,
    /// The compass step reached `min_step` with no improving probe.
    pub converged: bool,
}

/// `(1/N) sum_n mse(x_n)` from the closed forms.
pub fn average_mse(e: &EstimatorParams, coefficients: &[f64], sigma_w: f64) -> Result<f64> {
    check_sigma(sigma_w)?;
    check_coefficients(coefficients)?;
    Ok(objective(e, coefficients, sigma_w))
}

fn check_coefficients(coefficients: &[f64]) -> Result<()> {
    if coefficients.is_empty() {
        return Err(Error::Empty("coefficient sequence"));
    }
    if coefficients.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("coefficients must be finite"));
    }
    Ok(())
}

fn objective(e: &EstimatorParams, coefficients: &[f64], s: f64) -> f64 {
    coefficients.iter().map(|&x| mse_unchecked(e, x, s)).sum::<f64>() / coefficients.len() as f64
}

/// A point in a family's two-dimensional parameter space. HT ignores `a`.
/// PL: `a = alpha`; SS: `a = T0`. `t` is always the outer threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Coords {
    a: f64,
    t: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    at: Coords,
    value: f64,
}

struct Problem<'a> {
    family: Family,
    coefficients: &'a [f64],
    sigma: f64,
    t_max: f64,
}

impl Problem<'_> {
    fn params(&self, c: Coords) -> EstimatorParams {
        match self.family {
            Family::HardThreshold => EstimatorParams::hard(c.t),
            Family::PiecewiseLinear => EstimatorParams::piecewise_linear(c.a, c.t),
            Family::Semisoft => EstimatorParams::semisoft(c.a, c.t),
        }
        .expect("search stays inside the feasible region")
    }

    fn eval(&self, c: Coords) -> Candidate {
        Candidate {
            at: c,
            value: objective(&self.params(c), self.coefficients, self.sigma),
        }
    }

    /// Clamp onto the feasible region.
    fn project(&self, c: Coords) -> Coords {
        let t = c.t.clamp(0.0, self.t_max);
        let a = match self.family {
            Family::HardThreshold => 0.0,
            Family::PiecewiseLinear => c.a.clamp(0.0, 1.0),
            Family::Semisoft => c.a.clamp(0.0, t),
        };
        Coords { a, t }
    }

    /// Total order: objective, then T, then T0 (SS) or -alpha (PL).
    fn order(&self, x: &Candidate, y: &Candidate) -> Ordering {
        let secondary = |c: &Candidate| match self.family {
            Family::HardThreshold => 0.0,
            Family::PiecewiseLinear => -c.at.a,
            Family::Semisoft => c.at.a,
        };
        x.value
            .total_cmp(&y.value)
            .then_with(|| x.at.t.total_cmp(&y.at.t))
            .then_with(|| secondary(x).total_cmp(&secondary(y)))
    }

    fn grid(&self, cfg: &OptimizerConfig) -> Vec<Coords> {
        let ts: Vec<f64> = (0..cfg.t_points)
            .map(|i| self.t_max * i as f64 / (cfg.t_points - 1) as f64)
            .collect();
        match self.family {
            Family::HardThreshold => ts.iter().map(|&t| Coords { a: 0.0, t }).collect(),
            Family::PiecewiseLinear => (0..cfg.alpha_points)
                .map(|j| j as f64 / (cfg.alpha_points - 1) as f64)
                .flat_map(|a| ts.iter().map(move |&t| Coords { a, t }))
                .collect(),
            Family::Semisoft => ts
                .iter()
                .enumerate()
                .flat_map(|(i, &t)| ts[..=i].iter().map(move |&a| Coords { a, t }))
                .collect(),
        }
    }

    fn best(&self, points: Vec<Coords>) -> Candidate {
        #[cfg(feature = "parallel")]
        let evaluated: Vec<Candidate> = {
            use rayon::prelude::*;
            points.into_par_iter().map(|c| self.eval(c)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let evaluated: Vec<Candidate> = points.into_iter().map(|c| self.eval(c)).collect();
        evaluated
            .into_iter()
            .min_by(|x, y| self.order(x, y))
            .expect("grid is non-empty")
    }

    /// Compass search from `start`. Each poll takes the best strictly
    /// improving probe; the step halves when none improves.
    fn refine(&self, start: Candidate, cfg: &OptimizerConfig, evaluations: &mut usize) -> (Candidate, bool) {
        let t_step0 = self.t_max / (cfg.t_points - 1) as f64;
        let a_step0 = match self.family {
            Family::PiecewiseLinear => 1.0 / (cfg.alpha_points - 1) as f64,
            _ => t_step0,
        };
        let min_step = cfg.min_step * self.sigma;
        let mut scale = 1.0;
        let mut current = start;
        for _ in 0..cfg.max_iterations {
            let (da, dt) = (a_step0 * scale, t_step0 * scale);
            let mut dirs = vec![(0.0, dt), (0.0, -dt)];
            if self.family != Family::HardThreshold {
                dirs.extend([(da, 0.0), (-da, 0.0)]);
            }
            if self.family == Family::Semisoft {
                dirs.extend([(dt, dt), (-dt, -dt)]);
            }
            let mut improved: Option<Candidate> = None;
            for (ea, et) in dirs {
                let probe = self.project(Coords {
                    a: current.at.a + ea,
                    t: current.at.t + et,
                });
                if probe == current.at {
                    continue;
                }
                let cand = self.eval(probe);
                *evaluations += 1;
                if cand.value < current.value && improved.is_none_or(|b| self.order(&cand, &b) == Ordering::Less) {
                    improved = Some(cand);
                }
            }
            match improved {
                Some(c) => current = c,
                None => {
                    if dt < min_step {
                        return (current, true);
                    }
                    scale *= 0.5;
                }
            }
        }
        (current, false)
    }
}

fn run(
    family: Family,
    coefficients: &[f64],
    sigma_w: f64,
    cfg: &OptimizerConfig,
    seeds: &[Coords],
) -> Result<OptimizationResult> {
    check_sigma(sigma_w)?;
    check_coefficients(coefficients)?;
    cfg.validate()?;
    let problem = Problem {
        family,
        coefficients,
        sigma: sigma_w,
        t_max: cfg.t_max * sigma_w,
    };
    let grid = problem.grid(cfg);
    let mut evaluations = grid.len();
    let mut starts = vec![problem.best(grid)];
    for &s in seeds {
        starts.push(problem.eval(problem.project(s)));
        evaluations += 1;
    }
    let mut finals: Vec<(Candidate, bool)> = Vec::with_capacity(starts.len());
    for s in starts {
        finals.push(problem.refine(s, cfg, &mut evaluations));
    }
    let (best, converged) = finals
        .into_iter()
        .min_by(|x, y| problem.order(&x.0, &y.0))
        .expect("at least one start");
    Ok(OptimizationResult {
        estimator_kind: family,
        params: problem.params(best.at),
        avg_mse_per_symbol: best.value,
        evaluations,
        converged,
    })
}

/// Best threshold `T` in `[0, t_max]`.
pub fn optimize_ht(coefficients: &[f64], sigma_w: f64, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    run(Family::HardThreshold, coefficients, sigma_w, cfg, &[])
}

/// Best `(alpha, T)`. The HT optimum (`alpha = 0`) is an extra start, so
/// the result never loses to [`optimize_ht`].
pub fn optimize_pl(coefficients: &[f64], sigma_w: f64, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    let ht = optimize_ht(coefficients, sigma_w, cfg)?;
    optimize_pl_from(coefficients, sigma_w, cfg, &ht)
}

/// Best `(T0, T)` with `0 <= T0 <= T`, also started from the HT optimum
/// on the `T0 = T` edge.
pub fn optimize_ss(coefficients: &[f64], sigma_w: f64, cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    let ht = optimize_ht(coefficients, sigma_w, cfg)?;
    optimize_ss_from(coefficients, sigma_w, cfg, &ht)
}

fn optimize_pl_from(
    coefficients: &[f64],
    sigma_w: f64,
    cfg: &OptimizerConfig,
    ht: &OptimizationResult,
) -> Result<OptimizationResult> {
    let t = ht.params.threshold();
    run(
        Family::PiecewiseLinear,
        coefficients,
        sigma_w,
        cfg,
        &[Coords { a: 0.0, t }],
    )
}

fn optimize_ss_from(
    coefficients: &[f64],
    sigma_w: f64,
    cfg: &OptimizerConfig,
    ht: &OptimizationResult,
) -> Result<OptimizationResult> {
    let t = ht.params.threshold();
    run(Family::Semisoft, coefficients, sigma_w, cfg, &[Coords { a: t, t }])
}

/// Optimized results of all three families at one decay rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub ht: OptimizationResult,
    pub pl: OptimizationResult,
    pub ss: OptimizationResult,
}

impl SweepRow {
    pub fn results(&self) -> [&OptimizationResult; 3] {
        [&self.ht, &self.pl, &self.ss]
    }
}

pub fn optimize_all(coefficients: &[f64], sigma_w: f64, p: f64, cfg: &OptimizerConfig) -> Result<SweepRow> {
    let ht = optimize_ht(coefficients, sigma_w, cfg)?;
    let pl = optimize_pl_from(coefficients, sigma_w, cfg, &ht)?;
    let ss = optimize_ss_from(coefficients, sigma_w, cfg, &ht)?;
    Ok(SweepRow { p, ht, pl, ss })
}

/// One [`SweepRow`] per ensemble member, in `p_grid` order.
pub fn sweep_decay(ensemble: &CalibratedEnsemble, cfg: &OptimizerConfig) -> Result<Vec<SweepRow>> {
    let sigma = ensemble.sigma_w;
    let one = |m: &crate::sequences::DecayModel| optimize_all(&m.coefficients, sigma, m.p, cfg);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ensemble.members.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ensemble.members.iter().map(one).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{calibrate_ensemble, default_p_grid};

    fn quick() -> OptimizerConfig {
        OptimizerConfig {
            t_points: 61,
            alpha_points: 26,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn average_mse_examples() {
        let coeffs = [0.0, 1.0, 3.5, 9.0];
        let id = EstimatorParams::piecewise_linear(1.0, 4.0).unwrap();
        assert!((average_mse(&id, &coeffs, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let t0 = EstimatorParams::hard(0.0).unwrap();
        assert_eq!(average_mse(&t0, &coeffs, 2.0).unwrap(), 4.0);
        let ht = EstimatorParams::hard(2.0).unwrap();
        assert!((average_mse(&ht, &[0.0; 7], 1.0).unwrap() - 0.26146).abs() < 1e-4);
        assert!(average_mse(&ht, &[], 1.0).is_err());
    }

    #[test]
    fn all_zero_sequence_squelches() {
        let r = optimize_ht(&[0.0; 5], 1.0, &quick()).unwrap();
        // The objective underflows to 0 well before t_max; the tie-break then
        // keeps the smallest such threshold.
        assert!(r.params.threshold() >= 8.0, "{r:?}");
        assert!(r.avg_mse_per_symbol < 1e-12);
    }

    #[test]
    fn ml_point_is_always_feasible() {
        let coeffs: Vec<f64> = (0..40).map(|i| 0.25 * i as f64).collect();
        for r in [
            optimize_ht(&coeffs, 1.0, &quick()).unwrap(),
            optimize_pl(&coeffs, 1.0, &quick()).unwrap(),
            optimize_ss(&coeffs, 1.0, &quick()).unwrap(),
        ] {
            assert!(r.avg_mse_per_symbol <= 1.0 + 1e-9, "{r:?}");
            assert!(r.converged);
        }
    }

    #[test]
    fn containment_ordering_and_determinism() {
        let e = calibrate_ensemble(101, 0.04, &default_p_grid(), 1.0, 10.0).unwrap();
        for p in [0.5, 2.0, 20.0] {
            let seq = e.sequence_at(p).unwrap();
            let row = optimize_all(&seq.coefficients, 1.0, p, &quick()).unwrap();
            assert!(row.pl.avg_mse_per_symbol <= row.ht.avg_mse_per_symbol + 1e-12);
            assert!(row.ss.avg_mse_per_symbol <= row.ht.avg_mse_per_symbol + 1e-12);
            let again = optimize_all(&seq.coefficients, 1.0, p, &quick()).unwrap();
            assert_eq!(row, again);
        }
    }

    #[test]
    fn semisoft_diagonal_reproduces_ht_objective() {
        let coeffs = [0.1, 0.5, 2.0, 4.0, 7.0];
        for t in [0.5, 1.5, 3.0] {
            let ss = EstimatorParams::semisoft(t, t).unwrap();
            let ht = EstimatorParams::hard(t).unwrap();
            assert_eq!(
                average_mse(&ss, &coeffs, 1.0).unwrap(),
                average_mse(&ht, &coeffs, 1.0).unwrap()
            );
        }
    }

    #[test]
    fn optimum_is_a_local_minimum() {
        let e = calibrate_ensemble(101, 0.04, &default_p_grid(), 1.0, 10.0).unwrap();
        let seq = e.sequence_at(4.0).unwrap();
        let row = optimize_all(&seq.coefficients, 1.0, 4.0, &OptimizerConfig::default()).unwrap();
        let h = 1e-3;
        for r in row.results() {
            let probes: Vec<Option<EstimatorParams>> = match r.params {
                EstimatorParams::HardThreshold(p) => {
                    let t = p.threshold();
                    vec![EstimatorParams::hard(t + h).ok(), EstimatorParams::hard(t - h).ok()]
                }
                EstimatorParams::PiecewiseLinear(p) => {
                    let (a, t) = (p.alpha(), p.threshold());
                    vec![
                        EstimatorParams::piecewise_linear(a, t + h).ok(),
                        EstimatorParams::piecewise_linear(a, t - h).ok(),
                        EstimatorParams::piecewise_linear(a + h, t).ok(),
                        EstimatorParams::piecewise_linear(a - h, t).ok(),
                    ]
                }
                EstimatorParams::Semisoft(p) => {
                    let (t0, t) = (p.inner(), p.threshold());
                    vec![
                        EstimatorParams::semisoft(t0, t + h).ok(),
                        EstimatorParams::semisoft(t0, t - h).ok(),
                        EstimatorParams::semisoft(t0 + h, t).ok(),
                        EstimatorParams::semisoft(t0 - h, t).ok(),
                    ]
                }
            };
            for v in probes
                .into_iter()
                .flatten()
                .map(|p| average_mse(&p, &seq.coefficients, 1.0).unwrap())
            {
                assert!(v >= r.avg_mse_per_symbol - 1e-12, "{r:?}: neighbour {v}");
            }
        }
    }

    #[test]
    fn config_validation() {
        let bad = OptimizerConfig {
            t_points: 1,
            ..OptimizerConfig::default()
        };
        assert!(optimize_ht(&[1.0], 1.0, &bad).is_err());
        assert!(optimize_ht(&[1.0], 0.0, &OptimizerConfig::default()).is_err());
    }
}
