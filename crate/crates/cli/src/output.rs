//! Run directories: tables as CSV and/or JSON, reports as JSON, and a
//! manifest listing every emitted file with its SHA-256.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Text(s) => serde_json::Value::String(s.clone()),
            Cell::Missing => serde_json::Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<Option<u32>> for Cell {
    fn from(v: Option<u32>) -> Self {
        v.map(Cell::from).unwrap_or(Cell::Missing)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Column-named rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Collects files written into one run directory.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    formats: Vec<Format>,
    files: Vec<FileEntry>,
}

impl RunDir {
    pub fn create(root: &Path, formats: &[Format]) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|source| CliError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(RunDir {
            root: root.to_path_buf(),
            formats: formats.to_vec(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn into_files(self) -> Vec<FileEntry> {
        self.files
    }

    pub fn write_bytes(&mut self, name: &str, data: &[u8]) -> CliResult<()> {
        let path = self.root.join(name);
        fs::write(&path, data).map_err(|source| CliError::Io { path, source })?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: data.len() as u64,
            sha256: sha256_hex(data),
        });
        Ok(())
    }

    /// Writes `<stem>.csv` and/or `<stem>.json` depending on the formats.
    pub fn write_table(&mut self, stem: &str, table: &Table) -> CliResult<()> {
        if self.formats.contains(&Format::Csv) {
            let name = format!("{stem}.csv");
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |source| CliError::Csv {
                path: self.root.join(&name),
                source,
            };
            w.write_record(&table.columns).map_err(csv_err)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
            }
            let data = w.into_inner().map_err(|e| CliError::Io {
                path: self.root.join(&name),
                source: e.into_error(),
            })?;
            self.write_bytes(&name, &data)?;
        }
        if self.formats.contains(&Format::Json) {
            let rows: Vec<serde_json::Map<String, serde_json::Value>> = table
                .rows
                .iter()
                .map(|row| {
                    table
                        .columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::json))
                        .collect()
                })
                .collect();
            let doc = serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "columns": table.columns,
                "rows": rows,
            });
            let mut data = serde_json::to_vec_pretty(&doc)?;
            data.push(b'\n');
            self.write_bytes(&format!("{stem}.json"), &data)?;
        }
        Ok(())
    }

    /// JSON report with a leading `schema_version`.
    pub fn write_report<T: Serialize>(&mut self, name: &str, body: &T) -> CliResult<()> {
        let mut map = serde_json::Map::new();
        map.insert("schema_version".into(), SCHEMA_VERSION.into());
        match serde_json::to_value(body)? {
            serde_json::Value::Object(obj) => map.extend(obj),
            other => {
                map.insert("data".into(), other);
            }
        }
        let mut data = serde_json::to_vec_pretty(&serde_json::Value::Object(map))?;
        data.push(b'\n');
        self.write_bytes(name, &data)
    }
}

/// Recomputes every hash listed in `files` under `root`; returns the
/// entries that no longer match.
pub fn verify_files(root: &Path, files: &[FileEntry]) -> Vec<String> {
    files
        .iter()
        .filter(|f| match fs::read(root.join(&f.path)) {
            Ok(data) => sha256_hex(&data) != f.sha256 || data.len() as u64 != f.bytes,
            Err(_) => true,
        })
        .map(|f| f.path.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn tables_in_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(dir.path(), &[Format::Csv, Format::Json]).unwrap();
        let mut t = Table::new(["J", "power"]);
        t.push(vec![1u32.into(), 0.5.into()]);
        t.push(vec![Cell::Missing, f64::NAN.into()]);
        run.write_table("lines", &t).unwrap();
        let csv = fs::read_to_string(dir.path().join("lines.csv")).unwrap();
        assert_eq!(csv, "J,power\n1,0.5\n,NaN\n");
        let json: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("lines.json")).unwrap()).unwrap();
        assert_eq!(json["schema_version"], 1);
        assert_eq!(json["rows"][0]["power"], 0.5);
        assert!(json["rows"][1]["power"].is_null());
        assert!(verify_files(dir.path(), run.files()).is_empty());
        fs::write(dir.path().join("lines.csv"), "tampered").unwrap();
        assert_eq!(verify_files(dir.path(), run.files()), vec!["lines.csv"]);
    }
}
