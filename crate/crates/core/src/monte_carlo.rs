//! Seeded simulation of `y = x + w` used as an empirical check on the closed
//! forms. Noise for coefficient `n` comes from substream `n`, draw `t` for
//! trial `t`, and trials are accumulated in fixed-size chunks merged in
//! chunk order, so results do not depend on how the work is scheduled.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_sigma, Error, Result};
use crate::estimators::EstimatorParams;
use crate::rng::Stream;
use crate::sequences::DecayModel;

pub const MIN_TRIALS: u64 = 1000;
pub const DEFAULT_POINT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEQUENCE_TRIALS: u64 = 100_000;
const CHUNK: u64 = 1 << 16;

/// Running mean / sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Moments {
            n,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * w,
        }
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        (self.m2 / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub x: f64,
    pub trials: u64,
    pub seed: u64,
    pub bias_hat: f64,
    pub bias_stderr: f64,
    pub mse_hat: f64,
    pub mse_stderr: f64,
}

impl SimulationReport {
    /// Both estimates within `k` standard errors of the reference values.
    pub fn agrees_with(&self, bias: f64, mse: f64, k: f64) -> bool {
        within(self.bias_hat, self.bias_stderr, bias, k) && within(self.mse_hat, self.mse_stderr, mse, k)
    }
}

/// Aggregate over a whole coefficient vector: per trial the squared error
/// is averaged over the N coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub coefficients: usize,
    pub trials: u64,
    pub seed: u64,
    pub mse_hat: f64,
    pub mse_stderr: f64,
}

impl SequenceReport {
    pub fn agrees_with(&self, mse: f64, k: f64) -> bool {
        within(self.mse_hat, self.mse_stderr, mse, k)
    }
}

fn within(estimate: f64, stderr: f64, reference: f64, k: f64) -> bool {
    // Zero-variance cells (e.g. identity bias) only differ by rounding.
    (estimate - reference).abs() <= k * stderr + 1e-12 * (1.0 + reference.abs())
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::domain(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    Ok(())
}

fn chunks(trials: u64) -> Vec<(u64, u64)> {
    (0..trials.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(trials)))
        .collect()
}

fn map_chunks<T, F>(trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    let ranges = chunks(trials);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        ranges.into_par_iter().map(|(lo, hi)| f(lo, hi)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ranges.into_iter().map(|(lo, hi)| f(lo, hi)).collect()
    }
}

pub fn simulate_point(x: f64, e: &EstimatorParams, sigma_w: f64, trials: u64, seed: u64) -> Result<SimulationReport> {
    check_sigma(sigma_w)?;
    check_finite("x", x)?;
    check_trials(trials)?;
    let stream = Stream::new(seed, 0);
    let parts = map_chunks(trials, |lo, hi| {
        let mut err = Moments::default();
        let mut sq = Moments::default();
        for t in lo..hi {
            let y = x + sigma_w * stream.normal(t);
            let d = e.apply(y) - x;
            err.push(d);
            sq.push(d * d);
        }
        (err, sq)
    });
    let (err, sq) = parts
        .into_iter()
        .fold((Moments::default(), Moments::default()), |(a, b), (c, d)| {
            (a.merge(c), b.merge(d))
        });
    Ok(SimulationReport {
        x,
        trials,
        seed,
        bias_hat: err.mean,
        bias_stderr: err.stderr(),
        mse_hat: sq.mean,
        mse_stderr: sq.stderr(),
    })
}

pub fn simulate_sequence(
    seq: &DecayModel,
    e: &EstimatorParams,
    sigma_w: f64,
    trials: u64,
    seed: u64,
) -> Result<SequenceReport> {
    check_sigma(sigma_w)?;
    check_trials(trials)?;
    if seq.is_empty() {
        return Err(Error::Empty("sequence"));
    }
    let streams: Vec<Stream> = (0..seq.len() as u64).map(|n| Stream::new(seed, n)).collect();
    let inv_n = 1.0 / seq.len() as f64;
    let parts = map_chunks(trials, |lo, hi| {
        let mut acc = Moments::default();
        for t in lo..hi {
            let mut total = 0.0;
            for (x, s) in seq.coefficients.iter().zip(&streams) {
                let d = e.apply(x + sigma_w * s.normal(t)) - x;
                total += d * d;
            }
            // N = 1 skips the rescale so it reproduces `simulate_point` bit for bit.
            acc.push(if seq.len() == 1 { total } else { total * inv_n });
        }
        acc
    });
    let acc = parts.into_iter().fold(Moments::default(), Moments::merge);
    Ok(SequenceReport {
        coefficients: seq.len(),
        trials,
        seed,
        mse_hat: acc.mean,
        mse_stderr: acc.stderr(),
    })
}
