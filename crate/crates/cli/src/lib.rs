//! Scenario runner: configuration, presets, artifact files and parameter sweeps.

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use config::{Scenario, ScenarioConfig};
pub use error::{CliError, ConfigError};
pub use output::Summary;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "BRANCHSIM_THREADS";

/// Runs `f` on a pool sized by `BRANCHSIM_THREADS` (rayon's default when unset).
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| ConfigError::global(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ConfigError::global(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

/// Executes the scenario and writes its artifacts into `cfg.output`.
pub fn run(cfg: &ScenarioConfig) -> Result<Summary, CliError> {
    let artifacts = scenario::execute(cfg)?;
    let dir = &cfg.output;
    std::fs::create_dir_all(dir)?;
    if let Some(rows) = &artifacts.trajectory {
        output::write(dir, "trajectory.csv", &output::trajectory_csv(rows))?;
    }
    if let Some(rows) = artifacts.branches.as_ref().filter(|_| cfg.write_branches) {
        output::write(dir, "branches.csv", &output::branches_csv(rows))?;
    }
    output::write(dir, "summary.json", &artifacts.summary.to_json())?;
    output::write(dir, "config.echo", &cfg.echo())?;
    if let Some(bad) = artifacts.summary.oracles.iter().find(|o| !o.passed) {
        return Err(CliError::Numerical(branchsim_core::Error::InvalidArgument(format!(
            "oracle {} error {:.3e} exceeds threshold {:.3e}",
            bad.name, bad.max_abs_error, bad.threshold
        ))));
    }
    Ok(artifacts.summary)
}

pub fn run_file(path: &Path) -> Result<Summary, CliError> {
    run(&ScenarioConfig::load(path)?)
}

/// Runs the oracle battery with an optional name filter, writing into `output`.
pub fn check(filter: Option<String>, output: PathBuf) -> Result<Summary, CliError> {
    let cfg = ScenarioConfig { scenario: Scenario::Check, filter, output, ..Default::default() };
    run(&cfg)
}

/// Directory name of one sweep point.
pub fn sweep_dir(base: &Path, param: &str, value: &str) -> PathBuf {
    base.join(format!("{param}={value}"))
}

/// Runs one configuration per value (concurrently, each in a private
/// directory) and tabulates their headline metrics in `sweep.csv`.
pub fn sweep(base: &ScenarioConfig, param: &str, values: &[String]) -> Result<Vec<Summary>, CliError> {
    if !config::SWEEPABLE.contains(&param) {
        return Err(ConfigError::global(format!(
            "parameter `{param}` cannot be swept (choose one of {})",
            config::SWEEPABLE.join(", ")
        ))
        .into());
    }
    if values.is_empty() {
        return Err(ConfigError::global("sweep needs at least one value").into());
    }
    let configs = values
        .iter()
        .map(|v| {
            let mut cfg = base.clone();
            cfg.set(param, v).map_err(|m| ConfigError::global(format!("sweep value {v:?}: {m}")))?;
            if param == "K" {
                cfg.couplings = None;
            }
            cfg.output = sweep_dir(&base.output, param, v);
            cfg.validate().map_err(|m| ConfigError::global(format!("sweep value {v:?}: {m}")))?;
            Ok(cfg)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let summaries = configs.par_iter().map(run).collect::<Result<Vec<_>, CliError>>()?;

    let keys: Vec<&String> = summaries[0].headline.keys().collect();
    let mut csv = String::from(param);
    for k in &keys {
        csv.push(',');
        csv.push_str(k);
    }
    csv.push('\n');
    for (v, s) in values.iter().zip(&summaries) {
        csv.push_str(v);
        for k in &keys {
            let _ = write!(csv, ",{}", output::num(s.headline.get(*k).copied().unwrap_or(f64::NAN)));
        }
        csv.push('\n');
    }
    std::fs::create_dir_all(&base.output)?;
    output::write(&base.output, "sweep.csv", &csv)?;
    Ok(summaries)
}
