//! CSV tables with exact float formatting, plus JSON metadata sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&serde_json::Value> for Cell {
    fn from(v: &serde_json::Value) -> Self {
        match v {
            serde_json::Value::Bool(b) => Cell::Bool(*b),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Cell::Int(i),
                None => Cell::Float(n.as_f64().unwrap_or(f64::NAN)),
            },
            serde_json::Value::String(s) => Cell::Text(s.clone()),
            other => Cell::Text(other.to_string()),
        }
    }
}

/// Shortest decimal that parses back to the same `f64`; exponent form for
/// very small or very large magnitudes.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    /// The CSV text: header, one line per row, newline-terminated.
    pub fn to_csv(&self) -> Result<String, CliError> {
        if let Some((i, row)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != self.columns.len()) {
            return Err(CliError::Table(format!(
                "row {i} has {} cells, header has {}",
                row.len(),
                self.columns.len()
            )));
        }
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Table(e.to_string());
        writer.write_record(&self.columns).map_err(fail)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(Cell::render)).map_err(fail)?;
        }
        let bytes = writer.into_inner().map_err(|e| CliError::Table(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("CSV of UTF-8 cells"))
    }
}

pub fn write_table(table: &Table, path: &Path) -> Result<(), CliError> {
    let text = table.to_csv()?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Header and raw rows of a CSV file.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::io(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::io(path, e))?;
    Ok((header, rows))
}

/// One numeric column of a CSV file.
pub fn read_column(path: &Path, name: &str) -> Result<Vec<f64>, CliError> {
    let (header, rows) = read_table(path)?;
    let index = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Table(format!("no column '{name}' in {}", path.display())))?;
    rows.iter()
        .map(|r| r[index].parse::<f64>().map_err(|e| CliError::Table(format!("{name}: {e}"))))
        .collect()
}

/// Provenance of one output file. No timestamps, so identical runs produce
/// identical sidecars.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub command: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub backend: String,
    pub results: serde_json::Map<String, serde_json::Value>,
}

pub fn config_hash(canonical_config: &str) -> String {
    hex::encode(Sha256::digest(canonical_config.as_bytes()))
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

pub fn write_metadata(meta: &Metadata, csv_path: &Path) -> Result<PathBuf, CliError> {
    let path = sidecar_path(csv_path);
    let mut text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
