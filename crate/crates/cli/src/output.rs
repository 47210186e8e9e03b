use std::cell::RefCell;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn json(&self) -> Value {
        match self {
            Cell::Real(v) if v.is_finite() => json!(v),
            Cell::Real(_) => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self::with_columns(name, columns.iter().map(|c| c.to_string()).collect())
    }

    pub fn with_columns(name: impl Into<String>, columns: Vec<String>) -> Self {
        Self { name: name.into(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Where and how a command writes, plus what goes into every metadata record.
/// Files are held in memory until [`Sink::commit`].
pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pending: RefCell<Vec<(String, Vec<u8>)>>,
}

impl Sink {
    pub fn new(dir: PathBuf, format: Format, command: &'static str, seed: Option<u64>, config: Value) -> Self {
        Self { dir, format, command, seed, config, pending: RefCell::new(Vec::new()) }
    }

    fn stage(&self, file: String, bytes: Vec<u8>) -> Result<String> {
        let mut pending = self.pending.borrow_mut();
        if pending.iter().any(|(f, _)| *f == file) {
            bail!("output {file} produced twice");
        }
        pending.push((file.clone(), bytes));
        Ok(file)
    }

    /// Creates the output directory and writes every staged file atomically.
    pub fn commit(&self) -> Result<()> {
        std::fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        for (file, bytes) in self.pending.borrow().iter() {
            write_atomic(&self.dir.join(file), bytes)?;
        }
        Ok(())
    }

    fn meta(&self, artifact: &str) -> Value {
        json!({
            "artifact": artifact,
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "config": self.config,
        })
    }

    /// Stages a table and returns the file names, relative to the output directory.
    pub fn table(&self, table: &Table) -> Result<Vec<String>> {
        match self.format {
            Format::Csv => {
                let file = format!("{}.csv", table.name);
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&table.columns)?;
                for row in &table.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                let bytes = w.into_inner().context("flushing CSV buffer")?;
                let meta = pretty(&self.meta(&file))?;
                let meta_file = format!("{file}.meta.json");
                Ok(vec![self.stage(file, bytes)?, self.stage(meta_file, meta)?])
            }
            Format::Json => {
                let file = format!("{}.json", table.name);
                let rows: Vec<Vec<Value>> = table.rows.iter().map(|r| r.iter().map(Cell::json).collect()).collect();
                let doc = json!({ "meta": self.meta(&file), "columns": table.columns, "rows": rows });
                Ok(vec![self.stage(file, pretty(&doc)?)?])
            }
        }
    }

    /// Stages a structured record as JSON with its metadata alongside.
    pub fn record(&self, name: &str, value: &impl Serialize) -> Result<Vec<String>> {
        let file = format!("{name}.json");
        let doc = json!({ "meta": self.meta(&file), "data": value });
        Ok(vec![self.stage(file, pretty(&doc)?)?])
    }
}

fn pretty(v: &Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Write to a temporary file in the target directory, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
