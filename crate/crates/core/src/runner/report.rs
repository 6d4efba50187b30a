use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::RunError;

/// A flat table written as `<name>.csv` with one header row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }
}

/// Everything a run produced, plus what is needed to reproduce it.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub tolerances: BTreeMap<String, f64>,
    pub results: serde_json::Value,
    /// Human-readable lines echoed to standard output.
    pub summary: Vec<String>,
    pub tables: Vec<Table>,
    /// True unless some check inside the experiment failed.
    pub passed: bool,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// `report.json` plus one CSV per table; returns the report path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, RunError> {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        for t in &self.tables {
            let path = dir.join(t.file_name());
            let mut w = csv::Writer::from_path(&path).map_err(|e| RunError::io(&path, e.into()))?;
            w.write_record(&t.columns).map_err(|e| RunError::io(&path, e.into()))?;
            for row in &t.rows {
                w.write_record(row).map_err(|e| RunError::io(&path, e.into()))?;
            }
            w.flush().map_err(|e| RunError::io(&path, e))?;
        }
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(self).expect("report serialises");
        text.push('\n');
        fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
        Ok(path)
    }
}
