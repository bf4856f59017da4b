//! `qaperture`: beam patterns, EIT spectra, LO phase fits and QAM link
//! campaigns from a TOML configuration.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{ConfigDocument, Mode};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qaperture", version, about = "Rydberg-atom aperture beamforming simulator")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: single, multipeak, multiband, spectrum,
    /// interference, multiuser, multiband-link.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, env = "QAPERTURE_OUT", default_value = "qaperture-out")]
    out: PathBuf,
    /// Master seed (overrides `comms.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PatternMode {
    Single,
    Multipeak,
    Multiband,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LinkScenario {
    Interference,
    Multiuser,
    Multiband,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Beam pattern CSV(s) over an arrival-angle grid.
    Pattern {
        #[arg(long, value_enum)]
        mode: Option<PatternMode>,
        #[arg(long, allow_negative_numbers = true)]
        theta_start_deg: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        theta_stop_deg: Option<f64>,
        #[arg(long)]
        theta_step_deg: Option<f64>,
    },
    /// EIT/AT absorption spectrum over coupling detuning.
    Spectrum {
        /// Fit two Lorentzians and record the AT splitting in the manifest.
        #[arg(long)]
        fit: bool,
        #[arg(long, allow_negative_numbers = true)]
        delta_c_start_rad_s: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        delta_c_stop_rad_s: Option<f64>,
        #[arg(long)]
        delta_c_points: Option<usize>,
        #[arg(long)]
        rf_rabi_rad_s: Option<f64>,
    },
    /// Fit LO phases to a measured multipeak pattern.
    Fit {
        /// CSV with header `theta_deg,gain`.
        #[arg(long)]
        measured: PathBuf,
    },
    /// QAM link campaign; writes per-user metrics.
    Link {
        #[arg(long, value_enum)]
        scenario: Option<LinkScenario>,
        /// Payload bits per user (overrides `comms.bits` and per-signal bits).
        #[arg(long)]
        bits: Option<usize>,
    },
    /// Print the resolved configuration as TOML.
    Config,
}

fn load(cli: &Cli) -> Result<ConfigDocument, CliError> {
    let mut doc = match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            ConfigDocument::parse(&text)?
        }
        (None, Some(name)) => ConfigDocument::preset(name)?,
        (None, None) => ConfigDocument::preset("spectrum")?,
    };
    if let Some(seed) = cli.seed {
        doc.comms.seed = seed;
    }
    Ok(doc)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    }
    let mut doc = load(&cli)?;
    match cli.command {
        Command::Pattern { mode, theta_start_deg, theta_stop_deg, theta_step_deg } => {
            if let Some(m) = mode {
                doc.run.mode = Some(match m {
                    PatternMode::Single => Mode::Single,
                    PatternMode::Multipeak => Mode::Multipeak,
                    PatternMode::Multiband => Mode::Multiband,
                });
            }
            let r = &mut doc.run;
            r.theta_start_deg = theta_start_deg.unwrap_or(r.theta_start_deg);
            r.theta_stop_deg = theta_stop_deg.unwrap_or(r.theta_stop_deg);
            r.theta_step_deg = theta_step_deg.unwrap_or(r.theta_step_deg);
            commands::pattern(&doc, &cli.out)
        }
        Command::Spectrum { fit, delta_c_start_rad_s, delta_c_stop_rad_s, delta_c_points, rf_rabi_rad_s } => {
            let r = &mut doc.run;
            r.delta_c_start_rad_s = delta_c_start_rad_s.unwrap_or(r.delta_c_start_rad_s);
            r.delta_c_stop_rad_s = delta_c_stop_rad_s.unwrap_or(r.delta_c_stop_rad_s);
            r.delta_c_points = delta_c_points.unwrap_or(r.delta_c_points);
            r.rf_rabi_rad_s = rf_rabi_rad_s.unwrap_or(r.rf_rabi_rad_s);
            commands::spectrum(&doc, fit, &cli.out)
        }
        Command::Fit { measured } => commands::fit(&doc, &measured, &cli.out),
        Command::Link { scenario, bits } => {
            if let Some(s) = scenario {
                doc.run.mode = Some(match s {
                    LinkScenario::Interference => Mode::Interference,
                    LinkScenario::Multiuser => Mode::Multiuser,
                    LinkScenario::Multiband => Mode::Multiband,
                });
            }
            if let Some(b) = bits {
                doc.comms.bits = b;
                doc.signals.iter_mut().for_each(|s| s.bits = None);
            }
            commands::link(&doc, &cli.out)
        }
        Command::Config => {
            print!("{}", doc.to_toml()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
