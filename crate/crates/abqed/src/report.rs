//! CSV and JSON artifact writers with fixed columns and bit-stable float
//! formatting, so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Version tag embedded in every CSV header comment.
pub const CSV_FORMAT_VERSION: &str = "v1";

/// Format a float with full round-trip precision, deterministically.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}

/// A CSV table with a fixed column set and a version header comment.
pub struct CsvTable {
    name: &'static str,
    columns: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: &'static str, columns: &'static [&'static str]) -> Self {
        Self {
            name,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "column count mismatch");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# abqed {} {}", self.name, CSV_FORMAT_VERSION);
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write_to(&self, dir: &Path, filename: &str) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::ConfigError(format!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(filename);
        std::fs::write(&path, self.render())
            .map_err(|e| Error::ConfigError(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Write a JSON artifact with stable field order (struct order).
pub fn write_json<T: serde::Serialize>(
    value: &T,
    dir: &Path,
    filename: &str,
) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::ConfigError(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(filename);
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::ConfigError(format!("JSON encoding failed: {e}")))?;
    std::fs::write(&path, text)
        .map_err(|e| Error::ConfigError(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
