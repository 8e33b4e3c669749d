//! Subcommand implementations. Each `run` returns the process exit code;
//! errors bubble up to `lib.rs` where they are mapped onto exit codes.

pub mod convert;
pub mod distill;
pub mod evaluate;
pub mod filter;
pub mod mix;
pub mod report;

use std::path::{Path, PathBuf};

use instrux_core::error::{Error, Result};
use instrux_core::schema::FormatSpec;
use serde::Serialize;
use serde_json::Value;

pub fn parse_format(code: &str) -> Result<FormatSpec> {
    FormatSpec::parse_code(code)
}

/// `out/converted.jsonl` + `report.jsonl` -> `out/converted.report.jsonl`.
pub fn sibling_path(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    primary.with_file_name(format!("{stem}.{suffix}"))
}

pub fn write_json_lines<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = String::new();
    for row in rows {
        let line = serde_json::to_string(row)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        text.push_str(&line);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_pretty_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::json(path.display().to_string(), e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Dry-run output: the validated plan, nothing written.
pub fn print_plan(plan: &Value) {
    println!("{}", serde_json::to_string_pretty(plan).expect("plan serializes"));
}

/// Corpus name for an output file: its stem.
pub fn corpus_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string())
}
