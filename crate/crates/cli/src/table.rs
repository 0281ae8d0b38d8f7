//! CSV result tables with a `#`-prefixed metadata block.
//!
//! Every emitted value uses Rust's shortest round-trip float formatting
//! and the metadata carries no timestamps, so equal configurations
//! produce byte-identical files.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use anyhow::{ensure, Context, Result};

#[derive(Debug, Clone)]
pub struct ResultTable {
    metadata: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_meta(&mut self, key: &str, value: impl Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, cells: Vec<String>) -> Result<()> {
        ensure!(
            cells.len() == self.columns.len(),
            "row width {} does not match header width {}",
            cells.len(),
            self.columns.len()
        );
        self.rows.push(cells);
        Ok(())
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            out.push_str("# ");
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(value);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)
            .with_context(|| format!("creating {}", path.display()))?;
        file.write_all(self.to_csv().as_bytes())
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Shortest round-trip decimal form; deterministic for equal bits.
pub fn cell(value: impl Display) -> String {
    value.to_string()
}
