use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use rotkick_cli::commands::parse_duration;
use rotkick_cli::{parse_config, run_subcommand, CliError, RunFlags, ScenarioConfig};

/// Rotational excitation of molecules by trains of impulsive laser kicks.
#[derive(Parser, Debug)]
#[command(name = "rotkick", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand, Debug)]
enum Command {
    /// Propagate the ensemble through the train and emit the Raman spectrum.
    Simulate(Common),
    /// Spectra over a scanned period or delay.
    Spectrogram(Common),
    /// Objective curve along one interleave delay.
    Scan(Common),
    /// Coordinate-descent search over the interleave delays.
    Optimize(Common),
    /// Phase modulation of a broadband probe by the aligned gas.
    Mpm(Common),
    /// Resonance trajectories T_J = N_J τ_J / 2.
    Plan(Common),
    /// Peak intensity and duration to kick strength P.
    Convert {
        #[command(flatten)]
        common: Common,
        /// Peak intensity in W/cm².
        #[arg(long)]
        intensity: f64,
        /// Intensity FWHM, e.g. 100fs.
        #[arg(long, default_value = "100fs")]
        fwhm: String,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (TOML). `plan` and `convert` fall back to O₂ defaults.
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Replace a configuration value, e.g. `train.periodic.strength=7`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// More log output; repeat for debug.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn load(common: &Common, optional: bool) -> Result<ScenarioConfig, CliError> {
    match &common.config {
        Some(path) => parse_config(path, &common.overrides),
        None if optional => {
            let base = ScenarioConfig::builtin().to_toml();
            rotkick_cli::parse_str(&base, &common.overrides)
        }
        None => Err(CliError::Usage(
            "a scenario file is required for this subcommand".into(),
        )),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common, convert) = match &cli.command {
        Command::Simulate(c) => ("simulate", c, None),
        Command::Spectrogram(c) => ("spectrogram", c, None),
        Command::Scan(c) => ("scan", c, None),
        Command::Optimize(c) => ("optimize", c, None),
        Command::Mpm(c) => ("mpm", c, None),
        Command::Plan(c) => ("plan", c, None),
        Command::Convert {
            common,
            intensity,
            fwhm,
        } => ("convert", common, Some((*intensity, parse_duration(fwhm)?))),
    };
    let level = match common.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let config = load(common, matches!(name, "plan" | "convert"))?;
    let flags = RunFlags {
        threads: common.threads,
        seed: common.seed,
        out_dir: common.out_dir.clone(),
        intensity_w_cm2: convert.map(|c| c.0),
        fwhm: convert.map(|c| c.1),
    };
    let manifest = run_subcommand(name, &config, &flags)?;
    let dir = flags
        .out_dir
        .unwrap_or_else(|| PathBuf::from(&config.output.dir));
    println!(
        "{}: wrote {} files to {} in {:.2} s",
        manifest.command,
        manifest.files.len() + 1,
        dir.display(),
        manifest.wall_clock_seconds
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
