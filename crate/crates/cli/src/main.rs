mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Flags;

#[derive(Debug, Parser)]
#[command(
    name = "shrinkage-risk",
    version,
    about = "Exact risk of thresholding estimators under Gaussian noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bias, MSE and bounds over a grid of true values.
    RiskCurve(Flags),
    /// Hard-threshold MSE against the Cramer-Rao and oracle bounds, checked row by row.
    Bounds(Flags),
    /// Optimize every family over a calibrated ensemble of decaying sequences.
    Sweep(Flags),
    /// Monte Carlo estimates of bias and MSE compared with the closed forms.
    Simulate(Flags),
    /// Export one calibrated decaying sequence.
    Sequence(Flags),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Output(String),
    Numeric(String),
    Assertion(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Output(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Assertion(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Output(m) | CliError::Numeric(m) | CliError::Assertion(m) => m,
        }
    }
}

type Handler = fn(&config::Settings) -> Result<(), CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (flags, cmd): (&Flags, Handler) = match &cli.command {
        Command::RiskCurve(f) => (f, commands::risk_curve),
        Command::Bounds(f) => (f, commands::bounds),
        Command::Sweep(f) => (f, commands::sweep),
        Command::Simulate(f) => (f, commands::simulate),
        Command::Sequence(f) => (f, commands::sequence),
    };
    let settings = flags.resolve()?;
    if !commands::out_dir_exists(settings.out.as_deref()) {
        return Err(CliError::Output(format!(
            "output directory for {} does not exist",
            settings
                .out
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        )));
    }
    cmd(&settings)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match e {
                CliError::Usage(_) => "usage error",
                CliError::Output(_) => "output error",
                CliError::Numeric(_) => "numeric failure",
                CliError::Assertion(_) => "check failed",
            };
            eprintln!("shrinkage-risk: {kind}: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
