mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

/// Impact simulation and parameter fitting for mass-spring-damper drone frames.
#[derive(Debug, Parser)]
#[command(name = "crashfit", version)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (or directory for `synth`). Defaults to stdout where possible.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Mass, kg.
    #[arg(long, global = true)]
    mass: Option<f64>,
    /// Damping coefficient, N·s/m.
    #[arg(long, global = true)]
    damping: Option<f64>,
    /// Stiffness, N/m.
    #[arg(long, global = true)]
    stiffness: Option<f64>,
    /// Gravitational acceleration, m/s².
    #[arg(long, global = true)]
    gravity: Option<f64>,
    /// Latency filter cutoff, Hz.
    #[arg(long, global = true)]
    cutoff_hz: Option<f64>,
    /// Rate of the model grid the latency filter runs on, Hz.
    #[arg(long, global = true)]
    sample_rate_hz: Option<f64>,
    /// Logger sample rate for synthetic data, Hz.
    #[arg(long, global = true)]
    log_rate_hz: Option<f64>,
    /// Payload clearance, mm.
    #[arg(long, global = true)]
    x_limit_mm: Option<f64>,
    /// Free-fall threshold on |acc|, m/s².
    #[arg(long, global = true)]
    ff_threshold: Option<f64>,
    /// Minimum free-fall duration, s.
    #[arg(long, global = true)]
    ff_min_duration: Option<f64>,
    /// Impact onset threshold on |acc|, m/s².
    #[arg(long, global = true)]
    impact_threshold: Option<f64>,
    /// Peak search window after the onset, s.
    #[arg(long, global = true)]
    peak_window: Option<f64>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            mass: self.mass,
            damping: self.damping,
            stiffness: self.stiffness,
            gravity: self.gravity,
            cutoff_hz: self.cutoff_hz,
            sample_rate_hz: self.sample_rate_hz,
            log_rate_hz: self.log_rate_hz,
            x_limit_mm: self.x_limit_mm,
            ff_threshold: self.ff_threshold,
            ff_min_duration: self.ff_min_duration,
            impact_threshold: self.impact_threshold,
            peak_window: self.peak_window,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the impact trace for one drop altitude as CSV.
    Simulate(commands::SimulateArgs),
    /// Generate synthetic trial logs plus their ground-truth segmentation.
    Synth(commands::SynthArgs),
    /// Segment trial logs into free fall, impact onset and peak.
    Segment(commands::LogInputs),
    /// Fit stiffness from a static force-displacement CSV.
    FitStiffness(commands::FitStiffnessArgs),
    /// Fit damping (and optionally stiffness) to trial logs.
    FitDamping(commands::FitDampingArgs),
    /// Evaluate the loss on a (c, k) grid.
    LossSurface(commands::LossSurfaceArgs),
    /// Energy partition table across drop altitudes.
    Energy(commands::EnergyArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = RunConfig::load(cli.common.config.as_deref(), &cli.common.overrides())?;
    let out = cli.common.out.as_deref();
    match cli.command {
        Command::Simulate(args) => commands::simulate(&config, &args, out),
        Command::Synth(args) => commands::synth(&config, &args, out),
        Command::Segment(args) => commands::segment(&config, &args, out),
        Command::FitStiffness(args) => commands::fit_stiffness(&config, &args, out),
        Command::FitDamping(args) => commands::fit_damping(&config, &args, out),
        Command::LossSurface(args) => commands::loss_surface(&config, &args, out),
        Command::Energy(args) => commands::energy(&config, &args, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
