//! Flag parsing and the defaults < config file < flags merge.

use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Deserialize;
use shrinkage_risk::sequences::{default_p_grid, DEFAULT_LAMBDA, DEFAULT_N, DEFAULT_PEAK_MULTIPLE};
use shrinkage_risk::EstimatorParams;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyChoice {
    Ht,
    Pl,
    Ss,
    All,
}

/// Flags shared by every subcommand. Amplitudes (`--sigma` aside) are in
/// units of sigma unless `--absolute` is given.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// JSON file with any of the options below (flags win over it).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Noise standard deviation sigma_w [default: 1].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// First grid point of the true value x [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    /// Last grid point of x [default: 8].
    #[arg(long, allow_negative_numbers = true)]
    pub x_max: Option<f64>,
    /// Number of x grid points, at least 2 [default: 33].
    #[arg(long)]
    pub x_steps: Option<usize>,
    /// Estimator family; inferred from --alpha / --T0 when omitted [default: ht].
    #[arg(long, value_enum)]
    pub family: Option<FamilyChoice>,
    /// Outer threshold T [default: 2].
    #[arg(long = "T", value_name = "T")]
    pub t: Option<f64>,
    /// Dead-zone slope of the piecewise-linear estimator [default: 0.5].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Inner threshold of the semisoft estimator.
    #[arg(long = "T0", value_name = "T0", conflicts_with = "t0_ratio")]
    pub t0: Option<f64>,
    /// Inner threshold as a fraction of T [default: 0.5].
    #[arg(long = "T0-ratio", value_name = "RATIO")]
    pub t0_ratio: Option<f64>,
    /// Sequence length [default: 101].
    #[arg(long = "N", value_name = "N")]
    pub n: Option<usize>,
    /// Decay scale lambda [default: 0.04].
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Single decay rate.
    #[arg(long)]
    pub p: Option<f64>,
    /// Comma-separated decay rates [default: 50 log-spaced on 1/3..75].
    #[arg(long, value_delimiter = ',')]
    pub p_grid: Option<Vec<f64>>,
    /// Largest coefficient of the ensemble in units of sigma [default: 10].
    #[arg(long)]
    pub peak: Option<f64>,
    /// Histogram bin width [default: 0.5].
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Monte Carlo trials per cell [default: 1000000].
    #[arg(long)]
    pub trials: Option<u64>,
    /// Master seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Read and write amplitudes in absolute units instead of multiples of sigma.
    #[arg(long)]
    pub absolute: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    sigma: Option<f64>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    x_steps: Option<usize>,
    family: Option<FamilyChoice>,
    #[serde(rename = "T")]
    t: Option<f64>,
    alpha: Option<f64>,
    #[serde(rename = "T0")]
    t0: Option<f64>,
    #[serde(rename = "T0_ratio")]
    t0_ratio: Option<f64>,
    #[serde(rename = "N")]
    n: Option<usize>,
    lambda: Option<f64>,
    p: Option<f64>,
    p_grid: Option<Vec<f64>>,
    peak: Option<f64>,
    bin_width: Option<f64>,
    trials: Option<u64>,
    seed: Option<u64>,
    format: Option<Format>,
    out: Option<PathBuf>,
    absolute: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Inner {
    Absolute(f64),
    Ratio(f64),
}

/// Fully resolved settings. Amplitudes here are absolute.
#[derive(Debug, Clone)]
pub struct Settings {
    pub sigma: f64,
    /// Length unit used for input and output: sigma, or 1 with `--absolute`.
    pub unit: f64,
    pub absolute: bool,
    pub x_grid: Vec<f64>,
    pub family: FamilyChoice,
    pub t: f64,
    pub alpha: f64,
    pub t0: f64,
    pub n: usize,
    pub lambda: f64,
    pub p: Option<f64>,
    /// Explicit decay-rate grid, if any.
    pub p_grid: Option<Vec<f64>>,
    pub peak: f64,
    pub bin_width: f64,
    pub trials: Option<u64>,
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(usage(format!("--{name} must be finite and > 0, got {v}")))
    }
}

pub fn linear_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if steps < 2 {
        return Err(usage(format!("--x-steps must be at least 2, got {steps}")));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(usage(format!("need finite --x-min < --x-max, got [{lo}, {hi}]")));
    }
    let span = hi - lo;
    let last = (steps - 1) as f64;
    let mut grid: Vec<f64> = (0..steps).map(|i| lo + span * i as f64 / last).collect();
    grid[steps - 1] = hi;
    Ok(grid)
}

impl Flags {
    pub fn resolve(&self) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };

        let absolute = self.absolute || file.absolute.unwrap_or(false);
        let sigma = positive("sigma", self.sigma.or(file.sigma).unwrap_or(1.0))?;
        let unit = if absolute { 1.0 } else { sigma };

        let x_min = self.x_min.or(file.x_min).unwrap_or(0.0);
        let x_max = self.x_max.or(file.x_max).unwrap_or(8.0);
        let x_steps = self.x_steps.or(file.x_steps).unwrap_or(33);
        let x_grid = linear_grid(x_min * unit, x_max * unit, x_steps)?;

        if file.t0.is_some() && file.t0_ratio.is_some() {
            return Err(usage("config sets both T0 and T0_ratio"));
        }
        let flag_inner = self.t0.map(Inner::Absolute).or(self.t0_ratio.map(Inner::Ratio));
        let file_inner = file.t0.map(Inner::Absolute).or(file.t0_ratio.map(Inner::Ratio));
        let inner_given = flag_inner.or(file_inner);
        let alpha_given = self.alpha.or(file.alpha);

        let family = match self.family.or(file.family) {
            Some(f) => f,
            None => match (alpha_given.is_some(), inner_given.is_some()) {
                (false, false) => FamilyChoice::Ht,
                (true, false) => FamilyChoice::Pl,
                (false, true) => FamilyChoice::Ss,
                (true, true) => FamilyChoice::All,
            },
        };

        let t = self.t.or(file.t).unwrap_or(2.0);
        if !(t.is_finite() && t >= 0.0) {
            return Err(usage(format!("--T must be finite and >= 0, got {t}")));
        }
        let t = t * unit;
        let alpha = alpha_given.unwrap_or(0.5);
        let t0 = match inner_given.unwrap_or(Inner::Ratio(0.5)) {
            Inner::Absolute(v) => v * unit,
            Inner::Ratio(r) => {
                if !(0.0..=1.0).contains(&r) {
                    return Err(usage(format!("--T0-ratio must lie in [0, 1], got {r}")));
                }
                r * t
            }
        };

        let p = self.p.or(file.p);
        let p_grid = self.p_grid.clone().or(file.p_grid);
        if let Some(g) = &p_grid {
            if g.is_empty() {
                return Err(usage("--p-grid is empty"));
            }
            for &v in g {
                positive("p-grid", v)?;
            }
        }
        if let Some(v) = p {
            positive("p", v)?;
        }

        let settings = Settings {
            sigma,
            unit,
            absolute,
            x_grid,
            family,
            t,
            alpha,
            t0,
            n: self.n.or(file.n).unwrap_or(DEFAULT_N),
            lambda: positive("lambda", self.lambda.or(file.lambda).unwrap_or(DEFAULT_LAMBDA))?,
            p,
            p_grid,
            peak: positive("peak", self.peak.or(file.peak).unwrap_or(DEFAULT_PEAK_MULTIPLE))?,
            bin_width: positive("bin-width", self.bin_width.or(file.bin_width).unwrap_or(0.5))? * unit,
            trials: self.trials.or(file.trials),
            seed: self.seed.or(file.seed).unwrap_or(1),
            format: self.format.or(file.format).unwrap_or(Format::Csv),
            out: self.out.clone().or(file.out),
        };
        if settings.n == 0 {
            return Err(usage("--N must be at least 1"));
        }
        settings.estimators()?;
        Ok(settings)
    }
}

impl Settings {
    /// Decay rates to sweep: `--p-grid`, else `--p`, else the default grid.
    pub fn sweep_grid(&self) -> Vec<f64> {
        match (&self.p_grid, self.p) {
            (Some(g), _) => g.clone(),
            (None, Some(p)) => vec![p],
            (None, None) => default_p_grid(),
        }
    }

    /// Grid the ensemble energy is calibrated on when exporting one sequence.
    pub fn calibration_grid(&self) -> Vec<f64> {
        self.p_grid.clone().unwrap_or_else(default_p_grid)
    }

    /// The estimators selected by `--family`, in absolute units.
    pub fn estimators(&self) -> Result<Vec<EstimatorParams>, CliError> {
        let bad = |e: shrinkage_risk::Error| usage(e.to_string());
        let ht = || EstimatorParams::hard(self.t).map_err(bad);
        let pl = || EstimatorParams::piecewise_linear(self.alpha, self.t).map_err(bad);
        let ss = || EstimatorParams::semisoft(self.t0, self.t).map_err(bad);
        Ok(match self.family {
            FamilyChoice::Ht => vec![ht()?],
            FamilyChoice::Pl => vec![pl()?],
            FamilyChoice::Ss => vec![ss()?],
            FamilyChoice::All => vec![ht()?, pl()?, ss()?],
        })
    }
}
