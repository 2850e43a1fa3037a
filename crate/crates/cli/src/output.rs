//! Writing tables and reports, and reading them back.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::Format;
use crate::error::{CliError, CliResult};

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `rows` as `<dir>/<stem>.csv` or a JSON array `<dir>/<stem>.json`.
pub fn write_table<T: Serialize>(
    dir: &Path,
    stem: &str,
    format: Format,
    rows: &[T],
) -> CliResult<PathBuf> {
    match format {
        Format::Csv => write_csv(dir, stem, rows),
        Format::Json => write_json(dir, stem, &rows),
    }
}

pub fn write_csv<T: Serialize>(dir: &Path, stem: &str, rows: &[T]) -> CliResult<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(format!("{stem}.csv"));
    let fmt_err = |e: csv::Error| CliError::Format {
        path: path.clone(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(&path).map_err(fmt_err)?;
    for r in rows {
        w.serialize(r).map_err(fmt_err)?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn write_json<T: Serialize + ?Sized>(dir: &Path, stem: &str, value: &T) -> CliResult<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Format {
        path: path.clone(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let fmt_err = |e: csv::Error| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut r = csv::Reader::from_path(path).map_err(fmt_err)?;
    r.deserialize().map(|row| row.map_err(fmt_err)).collect()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads a table written by [`write_table`], choosing the parser by extension.
pub fn read_table<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_csv(path),
        Some("json") => read_json(path),
        _ => Err(CliError::Format {
            path: path.to_path_buf(),
            message: "expected a .csv or .json file".into(),
        }),
    }
}
