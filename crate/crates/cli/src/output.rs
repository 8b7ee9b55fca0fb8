//! Deterministic tabular output. Every float is printed with 12 significant
//! digits so golden files stay meaningful without being brittle at machine
//! epsilon.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Formats a float with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    format!("{x:.11e}")
}

/// Accumulates CSV text with a fixed header.
pub struct CsvTable {
    buf: String,
    columns: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Self {
            buf,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width mismatch");
        let _ = writeln!(self.buf, "{}", cells.join(","));
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, &self.buf)
    }
}

/// Cell helpers.
pub fn cell_f(x: f64) -> String {
    fmt12(x)
}

pub fn cell_u(x: u64) -> String {
    x.to_string()
}

pub fn cell_empty() -> String {
    String::new()
}
