//! Rendering and atomic writing of run artifacts.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::{CliError, Format};

/// Headered rows for CSV output.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Result of one subcommand.
#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub result: Value,
    pub table: Table,
    /// A checked inequality failed.
    pub check_failed: bool,
}

#[derive(Serialize)]
struct JsonArtifact<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a C,
    result: &'a Value,
}

pub fn render<C: Serialize>(format: Format, config: &C, outcome: &Outcome) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let doc = JsonArtifact {
                tool: "wordgrowth",
                version: env!("CARGO_PKG_VERSION"),
                config,
                result: &outcome.result,
            };
            let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::Config(e.to_string()))?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Config(e.to_string());
            w.write_record(&outcome.table.header).map_err(io)?;
            for row in &outcome.table.rows {
                w.write_record(row).map_err(io)?;
            }
            w.into_inner().map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write(out: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    let Some(path) = out else {
        return std::io::stdout().write_all(bytes);
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
