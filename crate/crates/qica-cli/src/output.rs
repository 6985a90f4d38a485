//! Result records and atomic file output.
//!
//! Every command writes one JSON record: `schema`, `command`, the resolved
//! `config` (with the seed), a `results` object, and a `timings` object.
//! Everything outside `timings` is a pure function of the config, so a
//! rerun with the same record's config reproduces it bit for bit.
//!
//! Files are written to a temporary sibling and renamed into place, so an
//! interrupted run never leaves a partial output behind.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QICA_OUT_DIR";

#[derive(Debug, Serialize)]
pub struct Record {
    pub schema: u32,
    pub command: String,
    pub config: Value,
    pub results: Value,
    pub timings: Value,
}

impl Record {
    pub fn new(command: &str, config: Value, results: Value, timings: Value) -> Self {
        Record {
            schema: 1,
            command: command.to_string(),
            config,
            results,
            timings,
        }
    }
}

/// Explicit path if given, otherwise `$QICA_OUT_DIR/<name>` (falling back
/// to the working directory).
pub fn resolve_out(explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
    match explicit {
        Some(p) => p,
        None => {
            let dir = std::env::var(OUT_DIR_ENV).unwrap_or_else(|_| ".".to_string());
            Path::new(&dir).join(default_name)
        }
    }
}

fn temp_sibling(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(format!(".tmp.{}", std::process::id()));
    path.with_file_name(name)
}

/// Write-then-rename; cleans up the temporary on failure.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating output directory {}", parent.display()))?;
        }
    }
    let tmp = temp_sibling(path);
    let write = fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()));
    if write.is_err() {
        let _ = fs::remove_file(&tmp);
        return write;
    }
    fs::rename(&tmp, path)
        .inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })
        .with_context(|| format!("renaming into {}", path.display()))
}

pub fn write_record(path: &Path, record: &Record) -> Result<()> {
    let mut text = serde_json::to_string_pretty(record)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Saves a matrix atomically in the format implied by the path extension.
pub fn save_matrix_atomic(m: &nalgebra::DMatrix<f64>, path: &Path) -> Result<()> {
    let format = qica_core::MatrixFormat::from_path(path);
    let tmp = temp_sibling(path);
    let save = qica_core::save_matrix(m, &tmp, format)
        .with_context(|| format!("writing {}", tmp.display()));
    if save.is_err() {
        let _ = fs::remove_file(&tmp);
        return save;
    }
    fs::rename(&tmp, path)
        .inspect_err(|_| {
            let _ = fs::remove_file(&tmp);
        })
        .with_context(|| format!("renaming into {}", path.display()))
}

pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}
