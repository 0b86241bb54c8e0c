//! CSV tables and the run manifest.
//!
//! Floats are written as `{:.16e}` (17 significant digits), rows end in LF,
//! and every table starts with its header row.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::Failure;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
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

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Status cell for a row: `ok` or the error text.
pub fn status<T, E: std::fmt::Display>(r: &Result<T, E>) -> Cell {
    match r {
        Ok(_) => Cell::from("ok"),
        Err(e) => Cell::Text(e.to_string()),
    }
}

/// `prefix0, prefix1, ..` column names.
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub struct Table {
    writer: csv::Writer<File>,
    width: usize,
    path: PathBuf,
    rows: usize,
}

impl Table {
    pub fn create(path: &Path, header: &[String]) -> Result<Self, Failure> {
        let file = File::create(path).map_err(|e| io_failure(path, e))?;
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
        writer.write_record(header).map_err(|e| io_failure(path, e))?;
        Ok(Self { writer, width: header.len(), path: path.to_path_buf(), rows: 0 })
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> Result<(), Failure> {
        assert_eq!(cells.len(), self.width, "row width does not match header of {}", self.path.display());
        let fields: Vec<String> = cells.iter().map(Cell::render).collect();
        self.writer.write_record(&fields).map_err(|e| io_failure(&self.path, e))?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn finish(mut self) -> Result<PathBuf, Failure> {
        self.writer.flush().map_err(|e| io_failure(&self.path, e))?;
        Ok(self.path)
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Header fields of `run_manifest.txt`, in order.
pub struct Manifest {
    pub entries: Vec<(String, String)>,
    pub config_text: Option<String>,
}

impl Manifest {
    pub fn new() -> Self {
        Self { entries: Vec::new(), config_text: None }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, Failure> {
        let path = dir.join("run_manifest.txt");
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        if let Some(text) = &self.config_text {
            out.push_str("\n[config]\n");
            out.push_str(text);
            if !text.ends_with('\n') {
                out.push('\n');
            }
        }
        let mut f = File::create(&path).map_err(|e| io_failure(&path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| io_failure(&path, e))?;
        Ok(path)
    }
}

impl Default for Manifest {
    fn default() -> Self {
        Self::new()
    }
}
