//! Pipeline orchestration behind the `crashctx` binary.

pub mod config;
pub mod layout;
pub mod stages;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crashctx_core::llm::Transport;

pub use config::RunConfig;
pub use layout::{Ledger, RunDir};

#[derive(Debug, Parser)]
#[command(name = "crashctx", version, about = "Enhance crash reports with call-graph context and evaluate the results")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, short, global = true, default_value = "crashctx.toml")]
    pub config: PathBuf,
    /// Run directory name; ingest defaults to the current UTC time, later
    /// stages to the latest run.
    #[arg(long, global = true)]
    pub run_id: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Filter the corpus and write the run manifest.
    Ingest,
    /// Resolve snapshots, build call-graph stores and ground truth.
    Index {
        /// Limit to these report ids.
        #[arg(long = "report")]
        reports: Vec<String>,
    },
    /// Produce enhanced reports.
    Enhance {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long = "report")]
        reports: Vec<String>,
    },
    /// Compute localization, retrieval and fix-similarity tables.
    Eval,
    /// Render enhanced reports as Markdown pages.
    Report,
    /// Every stage in order, both enhancement modes.
    Run,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Mode {
    Direct,
    Agentic,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Direct, Mode::Agentic];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Direct => "direct",
            Mode::Agentic => "agentic",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Builds the transport used for one report in record mode.
pub type TransportFactory = Arc<dyn Fn(Mode, &str) -> Arc<dyn Transport> + Send + Sync>;

/// Injection points for tests and embedders.
#[derive(Clone, Default)]
pub struct Hooks {
    /// Replaces the HTTP transport in record mode.
    pub transport: Option<TransportFactory>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Usage,
    Environment,
    Systemic,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: FailureKind::Usage,
            error: error.into(),
        }
    }

    pub fn environment(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: FailureKind::Environment,
            error: error.into(),
        }
    }

    pub fn systemic(error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: FailureKind::Systemic,
            error: error.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            FailureKind::Usage => 1,
            FailureKind::Environment => 2,
            FailureKind::Systemic => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type StageResult<T = ()> = Result<T, Failure>;

/// Loads the config and runs one command. Returns the run directory used.
pub fn execute(cli: &Cli, hooks: &Hooks) -> StageResult<RunDir> {
    let cfg = RunConfig::load(&cli.config).map_err(Failure::usage)?;
    execute_with(&cfg, &cli.command, cli.run_id.as_deref(), hooks)
}

pub fn execute_with(cfg: &RunConfig, command: &Command, run_id: Option<&str>, hooks: &Hooks) -> StageResult<RunDir> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(Failure::environment)?;
    pool.install(|| match command {
        Command::Ingest => stages::ingest::run(cfg, run_id),
        Command::Index { reports } => {
            let run = open(cfg, run_id)?;
            stages::index::run(cfg, &run, reports)?;
            Ok(run)
        }
        Command::Enhance { mode, reports } => {
            let run = open(cfg, run_id)?;
            stages::enhance::run(cfg, &run, *mode, reports, hooks)?;
            Ok(run)
        }
        Command::Eval => {
            let run = open(cfg, run_id)?;
            stages::evaluate::run(cfg, &run)?;
            Ok(run)
        }
        Command::Report => {
            let run = open(cfg, run_id)?;
            stages::report::run(&run)?;
            Ok(run)
        }
        Command::Run => {
            let run = stages::ingest::run(cfg, run_id)?;
            stages::index::run(cfg, &run, &[])?;
            for mode in Mode::ALL {
                stages::enhance::run(cfg, &run, mode, &[], hooks)?;
            }
            stages::evaluate::run(cfg, &run)?;
            stages::report::run(&run)?;
            Ok(run)
        }
    })
}

fn open(cfg: &RunConfig, run_id: Option<&str>) -> StageResult<RunDir> {
    RunDir::open(&cfg.output_dir, run_id).map_err(Failure::usage)
}
