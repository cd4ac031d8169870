//! Integer tables from CSV files or inline comma-separated lists.

use std::path::Path;

use num_bigint::BigUint;

use crate::CliError;

/// Loads a table. An existing path is read as CSV, taking the last column of
/// each row and skipping a header row; anything else must be an inline list.
pub fn load(src: &str) -> Result<Vec<BigUint>, CliError> {
    if Path::new(src).is_file() {
        return read_csv(Path::new(src));
    }
    let looks_inline =
        !src.trim().is_empty() && src.chars().all(|c| c.is_ascii_digit() || c == ',' || c.is_whitespace());
    if !looks_inline {
        return Err(CliError::Config(format!(
            "table {src:?} is neither a file nor an inline list"
        )));
    }
    src.split(',')
        .map(|t| {
            t.trim()
                .parse::<BigUint>()
                .map_err(|_| CliError::Config(format!("bad table entry {t:?}")))
        })
        .collect()
}

fn read_csv(path: &Path) -> Result<Vec<BigUint>, CliError> {
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let Some(last) = record.iter().next_back() else {
            continue;
        };
        if last.is_empty() {
            continue;
        }
        match last.parse::<BigUint>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(_) => return Err(bad(format!("row {}: not a non-negative integer: {last:?}", i + 1))),
        }
    }
    if out.is_empty() {
        return Err(bad("empty table".into()));
    }
    Ok(out)
}

pub fn load_u64(src: &str) -> Result<Vec<u64>, CliError> {
    load(src)?
        .into_iter()
        .map(|v| u64::try_from(v).map_err(|_| CliError::Config(format!("table {src:?}: entry exceeds 64 bits"))))
        .collect()
}
