//! Command-line driver: runs one experiment from a configuration file and
//! writes its artifacts plus a `manifest.json` into the output directory.

mod commands;
mod manifest;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use fracdamp::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "fracdamp",
    version,
    about = "Degenerate Schrödinger equation with fractional boundary damping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// TOML or JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override a configuration key, e.g. `--set model.alpha_frac=0.75`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the augmented system and record the energy trace.
    Simulate(Common),
    /// Refine the characteristic-equation roots for k_min..=k_max.
    Spectrum(Common),
    /// Resolvent-norm peaks along the imaginary axis and their growth exponent.
    Resolvent(Common),
    /// Certify the diffusive quadrature against the closed-form kernel.
    ValidateKernel(Common),
    /// Fit the log-log decay slope of an energy trace.
    FitDecay {
        #[command(flatten)]
        common: Common,
        /// Existing energy_trace.csv; a fresh simulation is run if omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Repeat the decay, resolvent and asymptotic fits over parameter values.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["alpha_deg", "alpha_frac", "rho", "wp"])]
        param: String,
        /// Comma-separated values; an empty list gives an empty table.
        #[arg(long, value_delimiter = ',', num_args = 0.., allow_hyphen_values = true)]
        values: Vec<f64>,
    },
}

fn load(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::from_path(&common.config)?;
    for kv in &common.overrides {
        cfg.apply_override(kv)?;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&common.out)?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(&load(&c)?, &c.out),
        Command::Spectrum(c) => commands::spectrum(&load(&c)?, &c.out),
        Command::Resolvent(c) => commands::resolvent(&load(&c)?, &c.out),
        Command::ValidateKernel(c) => commands::validate_kernel(&load(&c)?, &c.out),
        Command::FitDecay { common, trace } => {
            commands::fit_decay(&load(&common)?, &common.out, trace.as_deref())
        }
        Command::Sweep {
            common,
            param,
            values,
        } => commands::sweep(&load(&common)?, &common.out, &param, &values),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e
                .downcast_ref::<fracdamp::Error>()
                .map(|e| e.kind())
                .unwrap_or("io");
            let report =
                serde_json::json!({ "error": { "kind": kind, "message": format!("{e:#}") } });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
