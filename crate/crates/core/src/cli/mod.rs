//! Command-line front end: argument parsing, config files and report
//! emission.

mod commands;
mod config_file;
mod table;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Result;
use crate::harness::ExperimentConfig;

pub use config_file::{parse_config, parse_config_text};
pub use table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "featdp",
    version,
    about = "Differentially private feature transmission over fading channels"
)]
pub struct Cli {
    /// key=value config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. --set epsilon=2.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub output: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Noise calibration for the configured budget and encoder shape.
    Calibrate,
    /// Closed-form adversary, server and accuracy bounds.
    Bound,
    /// Monte Carlo trials of the full pipeline.
    Simulate,
    /// Sweep one parameter and report bounds next to empirical values.
    Sweep {
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
    },
    /// Smallest latent dimension meeting the omega target.
    Dimension,
    /// Multi-antenna bound and correlator simulation.
    Mimo,
    /// Compressed acquisition chain with feature-level reconstruction.
    AcquireDemo,
}

impl Cli {
    /// Effective config: file, then `--set` overrides, then `--seed` and
    /// `--trials`.
    pub fn resolve_config(&self) -> Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if let Some(t) = self.trials {
            overrides.push(format!("trials={t}"));
        }
        parse_config(self.config.as_deref(), &overrides)
    }
}

/// Build the report table for a parsed command line.
pub fn execute(cli: &Cli) -> Result<Table> {
    let cfg = cli.resolve_config()?;
    match &cli.command {
        Command::Calibrate => commands::calibrate(&cfg),
        Command::Bound => commands::bound(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Sweep { axis, values } => {
            let axis = axis.parse()?;
            commands::sweep(&cfg, axis, values)
        }
        Command::Dimension => commands::dimension(&cfg),
        Command::Mimo => commands::mimo(&cfg),
        Command::AcquireDemo => commands::acquire_demo(&cfg),
    }
}

pub fn render(table: &Table, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => table.to_json(),
    }
}

/// Run the CLI on `args` and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let report = match execute(&cli) {
        Ok(t) => render(&t, cli.output),
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, report.as_bytes()),
        None => std::io::stdout().lock().write_all(report.as_bytes()),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
