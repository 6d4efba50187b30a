//! Configuration ingestion, experiment orchestration and report emission.
//!
//! [`run`] dispatches a validated [`ExperimentConfig`] to the owning module and
//! collects an [`ExperimentReport`]. Reports hold the full config and seed, and
//! everything except `wall_clock_seconds` is a deterministic function of them.
//!
//! Tables written by each experiment, in column order:
//!
//! | experiment | file | columns |
//! |---|---|---|
//! | spectrum | `exponents.csv` | `index,estimate,analytic,abs_gap,variance` |
//! | stability | `profile.csv` | `omega_x,omega_y,abs_derivative` |
//! | perturb | `perturb.csv` | `cocycle,classification,essinf,witness_x,witness_y,lambda_integral` |
//! | prevalence | `measures.csv` | `epsilon,estimate,standard_error,hits,samples` |
//! | prevalence | `probe.csv` | `i,j,lambda_re,lambda_im,unstable` |
//! | verify | `verify.csv` | `suite,passed,detail` |
//!
//! Circle base points put the angle in `omega_x` and leave `omega_y` at 0.

pub mod config;
mod experiments;
pub mod report;
mod verify;

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::LabError;

pub use config::{parse_config, ConfigError, ConfigIssue, Experiment, ExperimentConfig, Preset};
pub use report::{ExperimentReport, Table};

/// Default output directory when neither `--out` nor the config sets one.
pub const OUTPUT_ENV: &str = "BLASCHKE_LAB_OUT";

/// Process exit status for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Process exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{module}::{operation}: {source}")]
    Numerical {
        module: &'static str,
        operation: &'static str,
        source: LabError,
    },

    /// An experiment ran but one of its own checks failed.
    #[error("{experiment}: {failed} check(s) failed")]
    CheckFailed { experiment: &'static str, failed: usize },

    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Name of the error class for diagnostics.
    pub fn class(&self) -> &'static str {
        match self {
            RunError::Config(e) => e.class(),
            RunError::Numerical { source, .. } => source.class(),
            RunError::CheckFailed { .. } => "CheckFailed",
            RunError::Io { .. } => "IoError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Numerical { .. } | RunError::CheckFailed { .. } => EXIT_NUMERICAL,
            RunError::Io { .. } => 1,
        }
    }
}

pub(crate) trait Context<T> {
    fn ctx(self, module: &'static str, operation: &'static str) -> Result<T, RunError>;
}

impl<T> Context<T> for Result<T, LabError> {
    fn ctx(self, module: &'static str, operation: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Numerical {
            module,
            operation,
            source,
        })
    }
}

/// Runs the configured experiment. Nothing is written to disk; see
/// [`ExperimentReport::write`].
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, RunError> {
    let clock = Instant::now();
    let outcome = match config.experiment {
        Experiment::Spectrum => experiments::spectrum(config)?,
        Experiment::Stability => experiments::stability(config)?,
        Experiment::Prevalence => experiments::prevalence(config)?,
        Experiment::Perturb => experiments::perturb(config)?,
        Experiment::Verify => verify::run_suites(config),
    };
    Ok(ExperimentReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.experiment.name().to_string(),
        seed: config.seed,
        config: config.clone(),
        tolerances: outcome.tolerances,
        results: outcome.results,
        summary: outcome.summary,
        tables: outcome.tables,
        passed: outcome.passed,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
    })
}

/// What an experiment hands back to [`run`].
pub(crate) struct Outcome {
    pub tolerances: std::collections::BTreeMap<String, f64>,
    pub results: serde_json::Value,
    pub summary: Vec<String>,
    pub tables: Vec<Table>,
    pub passed: bool,
}
