//! Report assembly and output routing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use equidist_core::stochastic::Verdict;
use serde::Serialize;
use serde_json::Value;

use crate::config::{Command, RunConfig};
use crate::error::{CliError, CliResult};

/// Environment variable naming the directory for reports when `--output`
/// is not given.
pub const OUTPUT_DIR_ENV: &str = "EQUIDIST_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn from_config(cfg: &RunConfig) -> CliResult<Self> {
        match cfg.get("format").unwrap_or("json") {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::Config(format!("--format: expected json or csv, got {other:?}"))),
        }
    }

    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Where the report goes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Destination {
    Stdout,
    File(PathBuf),
    /// No destination configured: only the summary is printed.
    None,
}

impl Destination {
    pub fn resolve(cfg: &RunConfig, command: Command, format: Format, env_dir: Option<&Path>) -> Self {
        match cfg.get("output") {
            Some("-") => Destination::Stdout,
            Some(path) => Destination::File(PathBuf::from(path)),
            None => match env_dir {
                Some(dir) => Destination::File(dir.join(format!("{command}.{}", format.extension()))),
                None => Destination::None,
            },
        }
    }
}

/// Header plus rows, already rendered as text.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let quote = |s: &String| {
            if s.contains([',', '"', '\n']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.clone()
            }
        };
        let _ = writeln!(out, "{}", self.header.iter().map(quote).collect::<Vec<_>>().join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.iter().map(quote).collect::<Vec<_>>().join(","));
        }
        out
    }
}

/// Outcome of one command.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub checkpoints: Vec<usize>,
    pub verdict: Option<Verdict>,
    pub result: Value,
    pub table: Table,
    /// Human-readable lines for the terminal.
    pub summary: Vec<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a BTreeMap<String, String>,
    checkpoints: &'a [usize],
    verdict: Option<&'static str>,
    result: &'a Value,
}

pub fn render(command: Command, cfg: &RunConfig, outcome: &Outcome, format: Format) -> CliResult<String> {
    Ok(match format {
        Format::Json => {
            let report = Report {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command: command.as_str(),
                config: &cfg.values,
                checkpoints: &outcome.checkpoints,
                verdict: outcome.verdict.map(Verdict::as_str),
                result: &outcome.result,
            };
            let mut s = serde_json::to_string_pretty(&report)?;
            s.push('\n');
            s
        }
        Format::Csv => outcome.table.to_csv(),
    })
}

pub fn write(dest: &Destination, text: &str) -> CliResult<()> {
    match dest {
        Destination::Stdout => print!("{text}"),
        Destination::File(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|source| CliError::Io {
                    path: parent.to_path_buf(),
                    source,
                })?;
            }
            fs::write(path, text).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
        }
        Destination::None => {}
    }
    Ok(())
}
