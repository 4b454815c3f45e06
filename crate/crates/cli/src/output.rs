//! Report serialization.
//!
//! JSON reports are `{"meta": ..., "result": ...}`. CSV reports start with a
//! single `# meta <json>` line followed by a header row and data rows.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Report {
    pub result: Value,
    /// CSV body including its header row.
    pub csv: String,
    /// Set when a self-check failed; the report is still written.
    pub failed_check: Option<String>,
}

impl Report {
    pub fn new<T: Serialize, R: Serialize>(result: &T, rows: &[R]) -> Result<Self, CliError> {
        Ok(Self { result: to_value(result)?, csv: csv_body(rows)?, failed_check: None })
    }
}

pub fn to_value<T: Serialize>(value: &T) -> Result<Value, CliError> {
    serde_json::to_value(value).map_err(|e| CliError::Usage(format!("cannot serialize result: {e}")))
}

/// Serializes flat records with a header row.
pub fn csv_body<R: Serialize>(rows: &[R]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::Usage(format!("cannot write csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("cannot write csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Metadata record: tool, version, command, master seed and resolved config.
pub fn meta(cfg: &RunConfig) -> Value {
    json!({
        "tool": "gwcp",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "seed": cfg.seed,
        "config": cfg,
    })
}

pub fn render(cfg: &RunConfig, report: &Report) -> String {
    match cfg.format {
        Format::Json => {
            let doc = json!({ "meta": meta(cfg), "result": report.result });
            serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"
        }
        Format::Csv => format!("# meta {}\n{}", meta(cfg), report.csv),
    }
}

/// Writes the rendered report to `--out` or `stdout`.
pub fn emit(cfg: &RunConfig, report: &Report, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = render(cfg, report);
    match &cfg.out {
        Some(path) => {
            let io_err = |source: io::Error| CliError::Io { path: path.clone(), source };
            let mut f = BufWriter::new(File::create(path).map_err(io_err)?);
            f.write_all(text.as_bytes()).map_err(io_err)?;
            f.flush().map_err(io_err)
        }
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
    }
}
