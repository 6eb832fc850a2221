//! `slowlight` — weak-probe pulse propagation, slow light, and light
//! storage in a three-level medium, on resonance and far detuned.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration, 4 numerics (failed
//! bracket/convergence), 5 window (grid too short for the response), 6 I/O.
//! Errors print a single JSON line on stderr.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use slowlight::scenarios::Baseline;
use slowlight_cli::config::{self, Config};
use slowlight_cli::error::CliError;
use slowlight_cli::presets;
use slowlight_cli::run::{execute, CommandKind};

#[derive(Parser)]
#[command(
    name = "slowlight",
    version,
    about = "Slow and stored light in a three-level medium: on-resonance vs detuned schemes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file; unset fields fall back to built-in defaults
    #[arg(long, global = true, value_name = "FILE", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Named built-in configuration (e.g. fig2_raman)
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Output directory for CSV files and manifest.json
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Override the number of Doppler quadrature nodes
    #[arg(long, global = true, value_name = "N")]
    doppler_nodes: Option<usize>,

    /// Override the number of time samples (power of two)
    #[arg(long, global = true, value_name = "N")]
    grid_t: Option<usize>,

    /// Override the number of spatial steps for time-domain runs
    #[arg(long, global = true, value_name = "N")]
    grid_z: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the steady-state response kernel over the pulse bandwidth
    Response,
    /// Propagate the probe pulse through the static medium (spectral method)
    Propagate,
    /// Propagate in the time domain with the configured control schedule
    Evolve,
    /// Find the optical depth that reaches the target on-resonance loss
    Calibrate,
    /// Compare on-resonance and detuned transmission traces
    Fig2,
    /// Sweep the one-photon detuning and record pulse/kernel observables
    SweepDetuning,
    /// Sweep the control power and fit group velocity vs |Omega_c|^2
    SweepPower,
    /// Store and retrieve the probe with both schemes on one schedule
    Storage,
}

impl Command {
    fn kind(&self) -> CommandKind {
        match self {
            Command::Response => CommandKind::Response,
            Command::Propagate => CommandKind::Propagate,
            Command::Evolve => CommandKind::Evolve,
            Command::Calibrate => CommandKind::Calibrate,
            Command::Fig2 => CommandKind::Fig2,
            Command::SweepDetuning => CommandKind::SweepDetuning,
            Command::SweepPower => CommandKind::SweepPower,
            Command::Storage => CommandKind::Storage,
        }
    }
}

fn load_config(cli: &Cli, defaults: &Baseline) -> Result<Config, CliError> {
    let text = if let Some(name) = &cli.preset {
        presets::lookup(name)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "unknown preset '{name}' (available: {})",
                    presets::PRESET_NAMES.join(", ")
                ))
            })?
            .to_string()
    } else if let Some(path) = &cli.config {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?
    } else {
        String::new()
    };
    let file = config::parse(&text)?
        .with_overrides(cli.doppler_nodes, cli.grid_t, cli.grid_z);
    config::resolve(&file, defaults)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(), // clap exits with 2 on usage errors
    };
    let kind = cli.command.kind();
    let result = load_config(&cli, &kind.defaults())
        .and_then(|config| execute(kind, &config, &cli.out));
    if let Err(err) = result {
        eprintln!("{}", err.error_json());
        std::process::exit(err.exit_code());
    }
}
