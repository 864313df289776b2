//! CSV tables and the JSON run manifest written beside them.

use std::path::{Path, PathBuf};

use arisim_core::config::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST_VERSION: u32 = 1;

/// A rectangular table of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush()
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub arisim: String,
    pub arisim_core: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub experiment: String,
    pub seed: u64,
    pub trials: usize,
    pub config_hash: String,
    pub versions: Versions,
    pub rows: usize,
    pub columns: Vec<String>,
    pub config: ExperimentConfig,
    pub summary: serde_json::Value,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, experiment: &str, columns: Vec<String>, rows: usize, summary: serde_json::Value) -> Self {
        Self {
            manifest_version: MANIFEST_VERSION,
            experiment: experiment.to_string(),
            seed: cfg.plan.seed,
            trials: cfg.plan.trials,
            config_hash: cfg.hash(),
            versions: Versions {
                arisim: env!("CARGO_PKG_VERSION").to_string(),
                arisim_core: arisim_core::VERSION.to_string(),
            },
            rows,
            columns,
            config: cfg.clone(),
            summary,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// `results.csv` -> `results.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}
