//! `flights`: command-line front end for Brownian flight campaigns.
//!
//! Exit codes: 0 pass, 1 a scientific check failed, 2 usage or
//! configuration error, 3 internal error.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::Outcome;
pub use config::SimConfig;

use crate::commands::OracleOptions;
use crate::config::Overrides;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file.
    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Core(#[from] flight_core::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    CheckFailed = 1,
    Usage = 2,
    Internal = 3,
}

impl CliError {
    pub fn exit_status(&self) -> ExitStatus {
        match self {
            CliError::Core(flight_core::Error::Internal(_)) | CliError::Internal(_) => ExitStatus::Internal,
            _ => ExitStatus::Usage,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "flights", version, about = "Brownian flights near rough boundaries")]
pub struct Cli {
    /// Print nothing but errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration: square-quick or koch-full.
    #[arg(long)]
    pub preset: Option<String>,
    /// Overrides master_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides workers.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides output_dir.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, workers: self.workers, output_dir: self.output_dir.clone() }
    }

    /// The configuration named by `--config` or `--preset`, with flag
    /// overrides applied.
    pub fn load(&self) -> Result<Option<SimConfig>, CliError> {
        let base = match (&self.config, &self.preset) {
            (Some(path), _) => SimConfig::load(path)?,
            (None, Some(name)) => SimConfig::preset(name)?,
            (None, None) => return Ok(None),
        };
        let mut cfg = base;
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(Some(cfg))
    }

    fn require(&self) -> Result<SimConfig, CliError> {
        self.load()?.ok_or_else(|| CliError::Usage("one of --config or --preset is required".into()))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Whitney decomposition: cubes.csv, layer_counts.csv, hypothesis.json.
    Decompose(CommonArgs),
    /// Flight campaign: flights.jsonl.
    Simulate(CommonArgs),
    /// Survival curve, exponent fits and report from a records file.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Defaults to flights.jsonl in the output directory.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Oracle self-test, decompose, simulate and analyze in one go.
    Verify(CommonArgs),
    /// Exit-time oracle self-test, optionally evaluating one interval query.
    /// Writes oracle.json when a configuration is given.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = commands::DEFAULT_ORACLE_PATHS)]
        paths: usize,
        #[arg(long, requires = "t")]
        x: Option<f64>,
        #[arg(long, requires = "x")]
        t: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
    },
}

fn with_pool<T>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    commands::set_quiet(cli.quiet);
    match cli.command {
        Command::Decompose(common) => {
            let cfg = common.require()?;
            with_pool(cfg.workers, || commands::decompose_cmd(&cfg))?
        }
        Command::Simulate(common) => {
            let cfg = common.require()?;
            with_pool(cfg.workers, || commands::simulate_cmd(&cfg))?
        }
        Command::Analyze { common, records } => {
            let cfg = common.load()?;
            let records = match (records, &cfg, &common.output_dir) {
                (Some(path), _, _) => path,
                (None, Some(cfg), _) => cfg.output_dir.join(output::FLIGHTS),
                (None, None, Some(dir)) => dir.join(output::FLIGHTS),
                (None, None, None) => {
                    return Err(CliError::Usage("analyze needs --records, --config, --preset or --output-dir".into()))
                }
            };
            let workers = cfg.as_ref().map_or(common.workers.unwrap_or(1), |c| c.workers);
            with_pool(workers, || commands::analyze_cmd(cfg.as_ref(), &records))?
        }
        Command::Verify(common) => {
            let cfg = common.require()?;
            with_pool(cfg.workers, || commands::verify_cmd(&cfg))?
        }
        Command::Oracle { common, paths, x, t, a } => {
            let cfg = common.load()?;
            let seed = cfg.as_ref().map_or(common.seed.unwrap_or(0), |c| c.master_seed);
            let workers = cfg.as_ref().map_or(common.workers.unwrap_or(1), |c| c.workers);
            let query = x.zip(t).map(|(x, t)| (x, a, t));
            let opts = OracleOptions { paths, seed, query };
            with_pool(workers, || commands::oracle_cmd(&opts, cfg.as_ref()))?
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Usage as i32 } else { ExitStatus::Pass as i32 };
        }
    };
    match execute(cli) {
        Ok(outcome) if outcome.pass => ExitStatus::Pass as i32,
        Ok(_) => ExitStatus::CheckFailed as i32,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_status() as i32
        }
    }
}
