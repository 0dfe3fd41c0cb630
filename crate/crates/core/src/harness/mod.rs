//! Command-line experiments: configuration, run directories, sweeps, and the
//! report subcommands.

mod commands;
mod config;
mod plot;
mod recipe;

use crate::analysis::AnalysisError;
use crate::pipeline::PipelineError;
use crate::policy::PolicyError;

pub use commands::{cli_cost, cli_evt, cli_rank_report, cli_run, CostArgs, EvtArgs, RankArgs};
pub use config::{RunConfig, KEYS, SCHEMA_VERSION};
pub use plot::line_plot_svg;
pub use recipe::{median, run_recipe, ExperimentRecipe, SweepRow};

/// Environment variable that overrides `worker_count`.
pub const WORKERS_ENV: &str = "FP4RL_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("config error{}: {key}: {message}", if *line > 0 { format!(" at line {line}") } else { String::new() })]
    Config { line: usize, key: String, message: String },
    #[error("numeric divergence: {0}")]
    Divergence(String),
    #[error("{0}")]
    Other(String),
}

impl HarnessError {
    pub(crate) fn config_at(line: usize, key: &str, message: &str) -> Self {
        HarnessError::Config {
            line,
            key: key.to_string(),
            message: message.to_string(),
        }
    }

    pub fn arg(key: &str, message: impl Into<String>) -> Self {
        HarnessError::Config {
            line: 0,
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => EXIT_CONFIG,
            HarnessError::Divergence(_) => EXIT_DIVERGENCE,
            HarnessError::Other(_) => EXIT_FAILURE,
        }
    }
}

impl From<PipelineError> for HarnessError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => HarnessError::arg("config", m),
            PipelineError::Divergence(m) => HarnessError::Divergence(m),
            other => HarnessError::Other(other.to_string()),
        }
    }
}

impl From<PolicyError> for HarnessError {
    fn from(e: PolicyError) -> Self {
        PipelineError::from(e).into()
    }
}

impl From<AnalysisError> for HarnessError {
    fn from(e: AnalysisError) -> Self {
        HarnessError::Other(e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Other(format!("i/o: {e}"))
    }
}

/// Worker count from the environment, falling back to `configured`.
pub fn resolve_workers(configured: usize) -> Result<usize, HarnessError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| HarnessError::arg(WORKERS_ENV, format!("`{v}` is not a worker count"))),
        Err(_) => Ok(configured),
    }
}

/// Run `f` on a pool of `workers` threads; 0 uses the global pool.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Other(e.to_string()))?;
    Ok(pool.install(f))
}
