//! Data tables and run reports.
//!
//! Tables are CSV preceded by a `#` block that names every column and its
//! unit. Values use Rust's shortest round-trip exponent form, so a table is a
//! pure function of the numbers it holds. Reports are a single JSON document.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::params::DerivedRates;

fn io_err(msg: impl Into<String>) -> Error {
    Error::Io(std::io::Error::other(msg.into()))
}

/// Column-major numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub columns: Vec<Column>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Table {
    pub fn new(title: &str) -> Self {
        Table {
            title: title.to_string(),
            columns: Vec::new(),
        }
    }

    pub fn column(mut self, name: &str, unit: &str, values: Vec<f64>) -> Self {
        self.columns.push(Column {
            name: name.to_string(),
            unit: unit.to_string(),
            values,
        });
        self
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn render(&self) -> Result<String> {
        let n = self.n_rows();
        if let Some(bad) = self.columns.iter().find(|c| c.values.len() != n) {
            return Err(io_err(format!(
                "table {}: column {} has {} rows, expected {n}",
                self.title,
                bad.name,
                bad.values.len()
            )));
        }
        let mut out = String::new();
        writeln!(out, "# {}", self.title).unwrap();
        for c in &self.columns {
            writeln!(out, "# {}: {}", c.name, c.unit).unwrap();
        }
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        writeln!(out, "{}", header.join(",")).unwrap();
        for i in 0..n {
            for (k, c) in self.columns.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write!(out, "{:e}", c.values[i]).unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = self.render()?;
        fs::write(path, text).map_err(|e| io_err(format!("{}: {e}", path.display())))
    }
}

/// Parse a table written by [`Table::write`].
pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| io_err(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    let title = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| io_err("missing title line"))?
        .to_string();
    let mut table = Table::new(&title);
    let mut header = None;
    for line in lines.by_ref() {
        match line.strip_prefix("# ") {
            Some(spec) => {
                let (name, unit) = spec
                    .split_once(": ")
                    .ok_or_else(|| io_err(format!("bad column line `{line}`")))?;
                table = table.column(name, unit, Vec::new());
            }
            None => {
                header = Some(line);
                break;
            }
        }
    }
    let header = header.ok_or_else(|| io_err("missing header row"))?;
    if header.split(',').count() != table.columns.len() {
        return Err(io_err("header does not match column block"));
    }
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != table.columns.len() {
            return Err(io_err(format!("row `{line}` has {} fields", fields.len())));
        }
        for (c, f) in table.columns.iter_mut().zip(fields) {
            c.values.push(f.parse().map_err(|_| io_err(format!("bad number `{f}`")))?);
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub exit_code: i32,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        ErrorRecord {
            kind: e.kind().to_string(),
            exit_code: e.exit_code(),
            message: e.to_string(),
        }
    }
}

/// Manifest and results of one run, written as `report.json`.
///
/// Non-finite numbers (an undetermined uncertainty, say) appear as `null`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub status: RunStatus,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
    pub threads: usize,
    pub seed: u64,
    pub config: Value,
    pub derived_rates: Option<DerivedRates>,
    pub warnings: Vec<String>,
    pub tables: Vec<String>,
    pub results: Value,
    pub error: Option<ErrorRecord>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| io_err(e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| io_err(format!("{}: {e}", path.display())))
    }
}

/// Output directory plus the tables written so far.
#[derive(Debug)]
pub struct OutputDir {
    pub root: PathBuf,
    pub written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| io_err(format!("{}: {e}", root.display())))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn table(&mut self, file: &str, table: &Table) -> Result<()> {
        table.write(&self.root.join(file))?;
        self.written.push(file.to_string());
        Ok(())
    }
}
