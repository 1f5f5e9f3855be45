//! Experiment runner for weighted inequalities of rough Marcinkiewicz
//! integrals and their commutators.
//!
//! A run builds one [`level::Level`] per refinement entry, evaluates the
//! selected probes on each, and writes one JSON and one CSV report per
//! experiment. Probes are run sequentially in config order; the operators
//! themselves are parallel, so row order never depends on scheduling.

pub mod config;
pub mod level;
pub mod probes;
pub mod report;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{Experiment, ExperimentConfig};
pub use report::{RatioReport, Row};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] rmu_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Runs every configured experiment; reports come back in config order.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<RatioReport>, HarnessError> {
    cfg.validate()?;
    let levels = level::build_levels(cfg)?;
    let shared = probes::Shared::new(cfg)?;
    cfg.experiments
        .iter()
        .map(|&e| probes::run_experiment(e, cfg, &levels, &shared))
        .collect()
}

/// Runs `cfg` and writes `<output>/<experiment>.{json,csv}` for each report.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, HarnessError> {
    let reports = run(cfg)?;
    std::fs::create_dir_all(&cfg.output).map_err(|source| HarnessError::Io {
        path: cfg.output.clone(),
        source,
    })?;
    let mut written = Vec::new();
    for r in &reports {
        let base = cfg.output.join(&r.experiment);
        report::write_report(r, &base)?;
        written.push(base.with_extension("json"));
        written.push(base.with_extension("csv"));
    }
    Ok(written)
}
