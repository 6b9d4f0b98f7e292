//! Sorted coefficient sequences with generalized-Gaussian decay,
//! `x_n = kappa * exp(-[lambda (n - 1)]^p)`, and the shared-energy
//! calibration that gives every decay rate in an ensemble the same SNR.

use serde::{Deserialize, Serialize};

use crate::error::{check_sigma, Error, Result};

/// Peak coefficient, in units of sigma_w, of the calibrated ensemble.
pub const DEFAULT_PEAK_MULTIPLE: f64 = 10.0;
pub const DEFAULT_N: usize = 101;
pub const DEFAULT_LAMBDA: f64 = 0.04;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub n: usize,
    pub lambda: f64,
    pub p: f64,
    pub kappa: f64,
    pub energy: f64,
    pub coefficients: Vec<f64>,
}

impl DecayModel {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Coefficients as CSV with header `n,x_n` (1-based `n`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,x_n\n");
        for (i, x) in self.coefficients.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, x));
        }
        out
    }
}

fn validate(n: usize, lambda: f64, p: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("sequence length N must be >= 1"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::domain(format!("lambda must be > 0, got {lambda}")));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::domain(format!("decay rate p must be > 0, got {p}")));
    }
    Ok(())
}

/// Unnormalized profile `exp(-[lambda (n-1)]^p)` for `n = 1..=N`.
fn profile(n: usize, lambda: f64, p: f64) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| {
        if k == 0 {
            1.0
        } else {
            (-(lambda * k as f64).powf(p)).exp()
        }
    })
}

/// `S(p) = sum_n exp(-2 [lambda (n-1)]^p)`, so that `energy = kappa^2 S(p)`.
pub fn profile_energy(n: usize, lambda: f64, p: f64) -> Result<f64> {
    validate(n, lambda, p)?;
    Ok(profile(n, lambda, p).map(|v| v * v).sum())
}

pub fn make_sequence(n: usize, lambda: f64, p: f64, energy: f64) -> Result<DecayModel> {
    validate(n, lambda, p)?;
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::domain(format!("energy must be > 0, got {energy}")));
    }
    let shape: Vec<f64> = profile(n, lambda, p).collect();
    let s: f64 = shape.iter().map(|v| v * v).sum();
    let kappa = (energy / s).sqrt();
    Ok(DecayModel {
        n,
        lambda,
        p,
        kappa,
        energy,
        coefficients: shape.into_iter().map(|v| kappa * v).collect(),
    })
}

/// `n` log-spaced decay rates on `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::domain(format!("log grid needs 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    match n {
        0 => Err(Error::domain("log grid needs at least one point")),
        1 => Ok(vec![lo]),
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut grid: Vec<f64> = (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect();
            grid[0] = lo;
            grid[n - 1] = hi;
            Ok(grid)
        }
    }
}

/// 50 log-spaced decay rates on `[1/3, 75]`.
pub fn default_p_grid() -> Vec<f64> {
    log_grid(1.0 / 3.0, 75.0, 50).expect("static grid bounds are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snr {
    pub linear: f64,
    pub db: f64,
}

/// `sum_n x_n^2 / (N sigma_w^2)`.
pub fn snr(seq: &DecayModel, sigma_w: f64) -> Result<Snr> {
    check_sigma(sigma_w)?;
    let linear = seq.energy / (seq.len() as f64 * sigma_w * sigma_w);
    Ok(Snr {
        linear,
        db: 10.0 * linear.log10(),
    })
}

/// Sequences over a grid of decay rates sharing one energy, chosen so the
/// largest coefficient anywhere in the ensemble is `peak_multiple * sigma_w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedEnsemble {
    pub n: usize,
    pub lambda: f64,
    pub p_grid: Vec<f64>,
    pub shared_energy: f64,
    pub sigma_w: f64,
    pub snr_db: f64,
    pub members: Vec<DecayModel>,
}

/// JSON metadata written next to exported sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMetadata {
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub p_grid: Vec<f64>,
    pub energy: f64,
    pub sigma_w: f64,
    pub snr_db: f64,
}

impl CalibratedEnsemble {
    pub fn metadata(&self) -> EnsembleMetadata {
        EnsembleMetadata {
            n: self.n,
            lambda: self.lambda,
            p_grid: self.p_grid.clone(),
            energy: self.shared_energy,
            sigma_w: self.sigma_w,
            snr_db: self.snr_db,
        }
    }

    /// Member whose decay rate is closest to `p`.
    pub fn nearest(&self, p: f64) -> &DecayModel {
        self.members
            .iter()
            .min_by(|a, b| (a.p - p).abs().total_cmp(&(b.p - p).abs()))
            .expect("ensemble is non-empty")
    }

    /// A sequence at an arbitrary decay rate with the ensemble's energy.
    pub fn sequence_at(&self, p: f64) -> Result<DecayModel> {
        make_sequence(self.n, self.lambda, p, self.shared_energy)
    }
}

/// Closed form: `kappa(p) = sqrt(E / S(p))` peaks where `S` is smallest, so
/// `E = (peak_multiple sigma_w)^2 min_p S(p)`. `S` is scanned, not assumed
/// monotone in `p`.
pub fn calibrate_ensemble(
    n: usize,
    lambda: f64,
    p_grid: &[f64],
    sigma_w: f64,
    peak_multiple: f64,
) -> Result<CalibratedEnsemble> {
    check_sigma(sigma_w)?;
    if p_grid.is_empty() {
        return Err(Error::Empty("p grid"));
    }
    if !(peak_multiple.is_finite() && peak_multiple > 0.0) {
        return Err(Error::domain(format!("peak multiple must be > 0, got {peak_multiple}")));
    }
    let s_min = p_grid
        .iter()
        .map(|&p| profile_energy(n, lambda, p))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let peak = peak_multiple * sigma_w;
    let energy = peak * peak * s_min;
    let members = p_grid
        .iter()
        .map(|&p| make_sequence(n, lambda, p, energy))
        .collect::<Result<Vec<_>>>()?;
    let snr_db = 10.0 * (energy / (n as f64 * sigma_w * sigma_w)).log10();
    Ok(CalibratedEnsemble {
        n,
        lambda,
        p_grid: p_grid.to_vec(),
        shared_energy: energy,
        sigma_w,
        snr_db,
        members,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub center: f64,
    pub count: usize,
}

/// Fixed-width histogram with bins `[k w, (k+1) w)`, covering every
/// coefficient; empty bins between the extremes are kept.
pub fn histogram(seq: &DecayModel, bin_width: f64) -> Result<Vec<HistogramBin>> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::domain(format!("bin width must be > 0, got {bin_width}")));
    }
    if seq.is_empty() {
        return Err(Error::Empty("sequence"));
    }
    let index = |x: f64| (x / bin_width).floor() as i64;
    let lo = seq.coefficients.iter().map(|&x| index(x)).min().unwrap();
    let hi = seq.coefficients.iter().map(|&x| index(x)).max().unwrap();
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &x in &seq.coefficients {
        counts[(index(x) - lo) as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            center: ((lo + i as i64) as f64 + 0.5) * bin_width,
            count,
        })
        .collect())
}
