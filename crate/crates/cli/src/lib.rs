//! Command-line driver for the `ghz_clock` simulator: strict JSON
//! configuration, six pipelines, and plot-ready CSV output with JSON
//! metadata sidecars.

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use commands::{run_command, Command, Outcome};
pub use config::{load_config, parse_config, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ghz-clock", version, about = "Entangled optical lattice clock simulator")]
pub struct Cli {
    /// Pipeline to run.
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory for the CSV table and its metadata sidecar.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Overrides run.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides run.backend.
    #[arg(long, value_enum)]
    pub backend: Option<config::BackendName>,
    /// Overrides run.trajectories.
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl clap::ValueEnum for config::BackendName {
    fn value_variants<'a>() -> &'a [Self] {
        &[config::BackendName::Dense, config::BackendName::Branch]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            config::BackendName::Dense => "dense",
            config::BackendName::Branch => "branch",
        }))
    }
}

/// The configuration a command actually runs with: file (or defaults) plus
/// flag overrides.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => config::load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    if let Some(backend) = cli.backend {
        config.run.backend = backend;
    }
    if let Some(t) = cli.trajectories {
        config.run.trajectories = t;
    }
    Ok(config)
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let config = effective_config(cli)?;
    match cli.jobs {
        None => run_command(cli.command, &config, &cli.out),
        Some(0) => Err(CliError::Usage {
            message: "--jobs must be at least 1".into(),
        }),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Usage { message: e.to_string() })?
            .install(|| run_command(cli.command, &config, &cli.out)),
    }
}

/// Parses arguments, runs, and reports. Returns the process exit code: the
/// summary goes to stdout as one JSON line, errors to stderr as one JSON line.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary_line(cli.command));
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            e.exit_code()
        }
    }
}
