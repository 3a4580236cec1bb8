//! The `aggsolve` command-line harness.

mod commands;
mod config;
mod experiment;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{time_modes, timing_csv, TimingRow, COMPARE_CSV_HEADER, REFERENCE_TOL};
pub use config::{ApproxSpec, ExperimentConfig, GraphSpec, ModelName, RawConfig, KEYS};
pub use experiment::{build_graph, build_polys, hausdorff_for, Experiment, Model};
pub use output::write_atomic;

use crate::error::{Error, Result};
use crate::par;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NONCONVERGED: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "aggsolve", version, about = "Nash equilibrium seeking for aggregative games on inscribed polyhedra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate the dynamics once and write trajectory.csv and report.txt.
    Run(CommonArgs),
    /// Regular-polygon sweep with epsilon measurement (2D models).
    SweepPolygons {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated vertex counts.
        #[arg(long)]
        m_list: Option<String>,
    },
    /// Time several approximation modes against each other.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated approximation specs.
        #[arg(long)]
        modes: Option<String>,
    },
    /// Print balance, connectivity and lambda of the configured graph.
    CheckGraph(CommonArgs),
    /// Run the invariant suite.
    Validate(CommonArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override any configuration key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// cournot | demand_response
    #[arg(long)]
    pub model: Option<String>,
    /// ring | complete | er:p | matrix
    #[arg(long)]
    pub graph: Option<String>,
    /// exact | regular:m | greedy:s | cube | file:path
    #[arg(long)]
    pub approx: Option<String>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Euler step h.
    #[arg(long)]
    pub step: Option<f64>,
    /// Terminal tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

impl CommonArgs {
    /// Config file first, then `--set` pairs, then dedicated flags.
    pub fn resolve(&self, extra: &[(&str, Option<String>)]) -> Result<ExperimentConfig> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::parse(&std::fs::read_to_string(path)?)?,
            None => RawConfig::default(),
        };
        for pair in &self.set {
            raw.set_pair(pair)?;
        }
        let flags: [(&str, Option<String>); 11] = [
            ("model.name", self.model.clone()),
            ("graph.type", self.graph.clone()),
            ("approx.mode", self.approx.clone()),
            ("dyn.beta1", self.beta1.map(|v| v.to_string())),
            ("dyn.beta2", self.beta2.map(|v| v.to_string())),
            ("dyn.step", self.step.map(|v| v.to_string())),
            ("dyn.tol", self.tol.map(|v| v.to_string())),
            ("dyn.max_steps", self.max_steps.map(|v| v.to_string())),
            ("dyn.seed", self.seed.map(|v| v.to_string())),
            ("out.dir", self.out.as_ref().map(|p| p.display().to_string())),
            ("compare.repeats", self.repeats.map(|v| v.to_string())),
        ];
        for (key, value) in flags.iter().chain(extra) {
            if let Some(v) = value {
                raw.set(key, v.clone())?;
            }
        }
        ExperimentConfig::from_raw(raw)
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_) | Error::Dimension { .. } | Error::Parse { .. } | Error::Io(_) | Error::Disconnected => EXIT_USAGE,
        Error::Domain(_) | Error::Infeasible(_) | Error::Numeric(_) | Error::InsufficientData(_) => EXIT_NUMERIC,
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Run(c) => commands::cmd_run(&c.resolve(&[])?),
        Command::SweepPolygons { common, m_list } => commands::cmd_sweep_polygons(&common.resolve(&[("sweep.m_list", m_list)])?),
        Command::Compare { common, modes } => commands::cmd_compare(&common.resolve(&[("compare.modes", modes)])?),
        Command::CheckGraph(c) => commands::cmd_check_graph(&c.resolve(&[])?),
        Command::Validate(c) => commands::cmd_validate(&c.resolve(&[])?),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match par::with_pool(par::requested_threads(), || dispatch(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
