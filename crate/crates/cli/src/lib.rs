//! Command-line driver for `coachsim`: experiment presets, TOML experiment
//! files and CSV output.
//!
//! ```text
//! coachsim run --preset rate-half --out results/ [--seed 7] [--trials 10000]
//! coachsim run --config my-experiment.toml --out results/
//! coachsim print-preset opt-compare > opt-compare.toml
//! ```
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid experiment, 3 I/O error,
//! 4 internal error. `COACHSIM_THREADS` caps the worker pool (0 = all cores).

pub mod config;
pub mod output;
pub mod presets;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use coachsim::churn_sim::{run_experiment, run_opt_compare};
use thiserror::Error;

use config::{ConfigError, ExperimentPreset, Lines, PlannedRun, RunKind};
use output::{write_csv, Rows};
use presets::Preset;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Config(ConfigError::Io { .. }) => 3,
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Internal(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "coachsim", version, about = "Repair-cost simulator for device caches backed by a base station")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a preset or an experiment file and write its CSV.
    Run(RunArgs),
    /// Print a preset as an experiment file.
    PrintPreset {
        #[arg(value_enum)]
        preset: Preset,
    },
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    #[arg(long, value_enum, conflicts_with = "config", required_unless_present = "config")]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the experiment's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the experiment's trial count.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

/// Loads the experiment named by `args` with overrides applied.
pub fn resolve(args: &RunArgs) -> Result<(ExperimentPreset, Vec<PlannedRun>), CliError> {
    let (mut exp, lines, base, path) = match (&args.preset, &args.config) {
        (Some(p), None) => {
            let exp = p.experiment();
            (exp, Lines::default(), PathBuf::from("."), format!("preset {}", p.name()))
        }
        (None, Some(path)) => {
            let display = path.display().to_string();
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: display.clone(),
                source,
            })?;
            let (exp, lines) = ExperimentPreset::parse(&text, &display)?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (exp, lines, base, display)
        }
        _ => return Err(CliError::Usage("exactly one of --preset and --config is required".into())),
    };
    if let Some(seed) = args.seed {
        exp.seed = seed;
    }
    if let Some(trials) = args.trials {
        if trials == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        exp.trials = trials;
    }
    let runs = exp.expand(&base, &lines, &path)?;
    Ok((exp, runs))
}

/// Runs every planned simulation and collects rows in plan order.
pub fn simulate(exp: &ExperimentPreset, runs: &[PlannedRun]) -> Result<Rows, CliError> {
    let internal = |e: coachsim::churn_sim::SimError| CliError::Internal(e.to_string());
    Ok(match exp.kind {
        RunKind::Simulate => {
            let mut rows = Vec::new();
            for run in runs {
                rows.extend(run_experiment(&run.config).map_err(internal)?);
            }
            Rows::Simulation(rows)
        }
        RunKind::OptCompare => {
            let mut rows = Vec::new();
            for run in runs {
                rows.extend(run_opt_compare(&run.config, exp.search_cap).map_err(internal)?);
            }
            Rows::OptCompare(rows)
        }
    })
}

/// Writes `<out>/<name>.csv` and returns its path.
pub fn write_output(out: &Path, name: &str, rows: &Rows) -> Result<PathBuf, CliError> {
    let io = |path: &Path, e: &dyn std::fmt::Display| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(out).map_err(|e| io(out, &e))?;
    let path = out.join(format!("{name}.csv"));
    let mut buf = Vec::new();
    write_csv(&mut buf, name, rows).map_err(|e| CliError::Internal(e.to_string()))?;
    std::fs::write(&path, buf).map_err(|e| io(&path, &e))?;
    Ok(path)
}

/// Sizes the global worker pool from `COACHSIM_THREADS`.
pub fn configure_threads() -> Result<(), CliError> {
    let threads = match std::env::var("COACHSIM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("COACHSIM_THREADS must be a non-negative integer, got {v:?}")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::PrintPreset { preset } => {
            print!("{}", preset.experiment().to_toml());
            Ok(())
        }
        Command::Run(args) => {
            configure_threads()?;
            let (exp, runs) = resolve(&args)?;
            let rows = simulate(&exp, &runs)?;
            let path = write_output(&args.out, &exp.name, &rows)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}
