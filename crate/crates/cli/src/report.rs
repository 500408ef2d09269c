//! Result tables and their on-disk form: `<command>.csv` with a fixed
//! column order and `<command>.json` holding provenance and timing.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    /// Floats carry 17 significant digits so they round-trip exactly.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Float(v) if v.is_nan() => "NaN".into(),
            Cell::Float(v) => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
    }
}

/// What a command hands back: the table plus resolved parameters.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub resolved: Value,
    pub warnings: Vec<String>,
}

pub struct RunMeta<'a> {
    pub command: &'a str,
    pub config_path: &'a Path,
    pub config: Value,
    pub seed: Option<u64>,
    pub workers: usize,
    pub elapsed_seconds: f64,
}

/// Writes both files and returns their paths.
pub fn write(dir: &Path, outcome: &Outcome, meta: &RunMeta) -> Result<(PathBuf, PathBuf), CliError> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{}.csv", meta.command));
    let json_path = dir.join(format!("{}.json", meta.command));
    std::fs::write(&csv_path, outcome.table.to_csv()?)?;
    let doc = json!({
        "command": meta.command,
        "version": env!("CARGO_PKG_VERSION"),
        "config_path": meta.config_path.display().to_string(),
        "config": meta.config,
        "resolved": outcome.resolved,
        "seed": meta.seed,
        "workers": meta.workers,
        "elapsed_seconds": meta.elapsed_seconds,
        "rows": outcome.table.rows.len(),
        "columns": outcome.table.columns,
        "csv": csv_path.file_name().map(|f| f.to_string_lossy().into_owned()),
        "warnings": outcome.warnings,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(&json_path, text + "\n")?;
    Ok((csv_path, json_path))
}
