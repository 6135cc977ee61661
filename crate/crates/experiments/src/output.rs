//! CSV tables and the JSON manifest of an output bundle.

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

/// Version of the CSV layout, written in the first line of every file.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Self::Text(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::Text(s) => s.clone(),
            Self::Num(v) => format_number(*v),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Self::Num(v) => Some(*v),
            Self::Text(_) => None,
        }
    }
}

/// Shortest round-trip representation; scientific outside [1e-3, 1e6).
fn format_number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e6).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// One CSV file: a named header and rows of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Cell::Num(v)).collect());
    }

    /// Numeric values of one column; text cells read as NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// File contents: a schema comment line, the header, then the rows.
    pub fn to_bytes(&self, experiment: &str) -> Result<Vec<u8>> {
        let mut out = format!(
            "# magnon-csv schema={SCHEMA_VERSION} experiment={experiment} table={}\n",
            self.name
        )
        .into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.columns)?;
            for row in &self.rows {
                w.write_record(row.iter().map(Cell::render))?;
            }
            w.flush().map_err(|e| Error::Output {
                path: self.file_name(),
                source: e,
            })?;
        }
        Ok(out)
    }
}

/// Everything an experiment produces before it is written out.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bundle {
    pub tables: Vec<Table>,
    /// Scalar results, e.g. fitted or calibrated values.
    pub results: BTreeMap<String, f64>,
    /// Named RNG streams used for Monte-Carlo sampling.
    pub streams: BTreeMap<String, u64>,
}

impl Bundle {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub rows: usize,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub experiment: String,
    pub code_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub streams: BTreeMap<String, u64>,
    pub shots: usize,
    pub paper_scale: bool,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
    pub results: BTreeMap<String, f64>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::Output {
        path: path.display().to_string(),
        source: e,
    })
}

/// Writes every table and the manifest into the bundle directory.
pub fn write_bundle(cfg: &ExperimentConfig, bundle: &Bundle, wall: Duration) -> Result<Manifest> {
    let dir = cfg.bundle_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::Output {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut files = Vec::with_capacity(bundle.tables.len());
    for t in &bundle.tables {
        let bytes = t.to_bytes(cfg.id.name())?;
        write_file(&dir.join(t.file_name()), &bytes)?;
        files.push(FileEntry {
            name: t.file_name(),
            sha256: sha256_hex(&bytes),
            rows: t.rows.len(),
            columns: t.columns.clone(),
        });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.id.name().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        streams: bundle.streams.clone(),
        shots: cfg.shots,
        paper_scale: cfg.paper_scale,
        wall_time_s: wall.as_secs_f64(),
        files,
        results: bundle.results.clone(),
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_file(&dir.join(MANIFEST_NAME), &json)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_starts_with_schema_line() {
        let mut t = Table::new("demo", &["x", "label"]);
        t.push(vec![Cell::Num(0.5), "a,b".into()]);
        t.push(vec![Cell::Num(1.25e-7), "c".into()]);
        let text = String::from_utf8(t.to_bytes("fig3_tau_sweep").unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# magnon-csv schema=1 experiment=fig3_tau_sweep table=demo");
        assert_eq!(lines[1], "x,label");
        assert_eq!(lines[2], "0.5,\"a,b\"");
        assert_eq!(lines[3], "1.25e-7,c");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, -3.5, 1e-3, 0.000999, 123456.789, 2.5e6, f64::MIN_POSITIVE, -7.123456789012345e-11] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn column_lookup() {
        let mut t = Table::new("demo", &["a", "b"]);
        t.push_nums(&[1.0, 2.0]);
        t.push_nums(&[3.0, 4.0]);
        assert_eq!(t.column("b").unwrap(), vec![2.0, 4.0]);
        assert!(t.column("c").is_none());
    }
}
