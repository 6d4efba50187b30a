use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use blaschke_lab::runner::{self, parse_config, ConfigError, ConfigIssue, Experiment, ExperimentConfig, RunError};

#[derive(Parser)]
#[command(
    name = "blaschke-lab",
    version,
    about = "Experiments on random Blaschke product cocycles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov exponents of the transfer-operator cocycle against the analytic spectrum
    Spectrum(Flags),
    /// Stable / unstable classification and the Lyapunov integral
    Stability(Flags),
    /// Unstable parameter sets, ε-tube measures and the probe scan
    Prevalence(Flags),
    /// Classification before and after a λ-perturbation
    Perturb(Flags),
    /// Quick pass/fail invariant suites
    Verify(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// TOML experiment file; defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config file
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for report.json and the CSV tables
    #[arg(long, env = runner::OUTPUT_ENV)]
    out: Option<PathBuf>,
}

fn load(experiment: Experiment, path: Option<&Path>) -> Result<ExperimentConfig, RunError> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default_for(experiment));
    };
    let text = fs::read_to_string(path).map_err(|e| {
        ConfigError::Parse(ConfigIssue {
            key: String::new(),
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })
    })?;
    let mut config = parse_config(&text)?;
    if config.experiment != experiment {
        return Err(ConfigError::Validation(vec![ConfigIssue {
            key: "experiment".into(),
            line: None,
            message: format!(
                "file describes `{}` but the subcommand is `{experiment}`",
                config.experiment
            ),
        }])
        .into());
    }
    if let Some(dir) = path.parent() {
        config.resolve_paths(dir)?;
    }
    Ok(config)
}

fn execute(experiment: Experiment, flags: Flags) -> Result<(), RunError> {
    let mut config = load(experiment, flags.config.as_deref())?;
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    if let Some(n) = flags.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global worker pool is configured once");
    }
    let report = runner::run(&config)?;
    for line in &report.summary {
        println!("{line}");
    }
    let out = flags.out.or_else(|| config.output.dir.clone());
    if let Some(dir) = out {
        let path = report.write(&dir)?;
        println!("report written to {}", path.display());
    }
    if !report.passed {
        let failed = report.summary.iter().filter(|l| l.starts_with("FAIL")).count().max(1);
        return Err(RunError::CheckFailed {
            experiment: experiment.name(),
            failed,
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match cli.command {
        Command::Spectrum(f) => (Experiment::Spectrum, f),
        Command::Stability(f) => (Experiment::Stability, f),
        Command::Prevalence(f) => (Experiment::Prevalence, f),
        Command::Perturb(f) => (Experiment::Perturb, f),
        Command::Verify(f) => (Experiment::Verify, f),
    };
    match execute(experiment, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.class());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
