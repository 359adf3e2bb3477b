//! Command-line front end: `represent`, `diagnose`, `sweep`, `replay`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lebrep::config::{preset, ExperimentConfig, SweepConfig, PRESET_NAMES};
use lebrep::error::{Error, Result};
use lebrep::runner;

#[derive(Parser)]
#[command(
    name = "lebrep",
    version,
    about = "Adapted Lebesgue-integral representations of terminal random variables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Path to a JSON experiment config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Name of a bundled preset.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (must exist).
    #[arg(long)]
    out: PathBuf,
    /// Override the Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Override the grid as `N,q` (e.g. `16384,2`).
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a rate process, write the rate CSV and reproduction summary.
    Represent(CommonOpts),
    /// Run the configured diagnostics, one report per check.
    Diagnose(CommonOpts),
    /// Sweep one parameter (gamma, alpha, p, N) over a list of values.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Parameter to sweep (overrides the config's sweep block).
        #[arg(long)]
        parameter: Option<String>,
        /// Comma-separated sweep values (overrides the config's sweep block).
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
    },
    /// Re-run a recorded manifest, reproducing all outputs bitwise.
    Replay {
        /// Path to a manifest.json from a previous run.
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory (must exist).
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(opts: &CommonOpts) -> Result<(ExperimentConfig, Option<String>)> {
    let (mut config, name) = match (&opts.config, &opts.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            (serde_json::from_str(&text)?, None)
        }
        (None, Some(name)) => (preset(name)?, Some(name.clone())),
        _ => {
            return Err(Error::InvalidParameter(format!(
                "pass exactly one of --config / --preset (presets: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    if let Some(seed) = opts.seed {
        config.mc.seed = seed;
    }
    if let Some(paths) = opts.paths {
        config.mc.n_paths = paths;
    }
    if let Some(grid) = &opts.grid {
        let parts: Vec<&str> = grid.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::InvalidParameter(format!("--grid expects N,q; got {grid}")));
        }
        config.grid.n = parts[0]
            .trim()
            .parse()
            .map_err(|e| Error::InvalidParameter(format!("bad N in --grid: {e}")))?;
        config.grid.q = parts[1]
            .trim()
            .parse()
            .map_err(|e| Error::InvalidParameter(format!("bad q in --grid: {e}")))?;
    }
    Ok((config, name))
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Represent(opts) => {
            let (config, name) = load_config(&opts)?;
            let repro = runner::run_represent(&config, &opts.out, name.as_deref())?;
            println!(
                "represent: rms_abs = {:.6e}, rms/sd(xi) = {:.6e} -> {}",
                repro.rms_abs,
                repro.rms_relative,
                opts.out.display()
            );
        }
        Command::Diagnose(opts) => {
            let (config, name) = load_config(&opts)?;
            runner::run_diagnose(&config, &opts.out, name.as_deref())?;
            println!("diagnose: reports written to {}", opts.out.display());
        }
        Command::Sweep { common, parameter, values } => {
            let (config, name) = load_config(&common)?;
            let sweep = match (parameter, values) {
                (Some(p), Some(v)) => {
                    let values = if v.trim().is_empty() {
                        Vec::new()
                    } else {
                        v.split(',')
                            .map(|s| {
                                s.trim().parse::<f64>().map_err(|e| {
                                    Error::InvalidParameter(format!("bad sweep value {s}: {e}"))
                                })
                            })
                            .collect::<Result<Vec<f64>>>()?
                    };
                    SweepConfig { parameter: p, values }
                }
                (None, None) => config.sweep.clone().ok_or_else(|| {
                    Error::InvalidParameter(
                        "sweep needs --parameter/--values or a sweep block in the config".into(),
                    )
                })?,
                _ => {
                    return Err(Error::InvalidParameter(
                        "--parameter and --values must be given together".into(),
                    ))
                }
            };
            let rows = runner::run_sweep(&config, &common.out, name.as_deref(), &sweep)?;
            println!(
                "sweep: {} row(s) written to {}",
                rows.len(),
                common.out.display()
            );
        }
        Command::Replay { manifest, out } => {
            runner::replay(&manifest, &out)?;
            println!("replay: outputs reproduced in {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
