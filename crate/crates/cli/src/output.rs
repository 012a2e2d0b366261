//! Rendering of result tables and the run manifest.

use crate::error::CliError;
use bsv_core::io::csv_string;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Config(format!("`run.format`: unknown value `{s}` (one of: csv, json)"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comment: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            comment: None,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_comment(mut self, c: impl Into<String>) -> Self {
        self.comment = Some(c.into());
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Column-per-series table over a shared x axis.
    pub fn from_columns(names: &[String], cols: &[Vec<f64>]) -> Self {
        let n = cols.first().map_or(0, |c| c.len());
        Self {
            comment: None,
            columns: names.to_vec(),
            rows: (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect(),
        }
    }

    pub fn render(&self, f: Format) -> Vec<u8> {
        match f {
            Format::Csv => {
                let h: Vec<&str> = self.columns.iter().map(|s| s.as_str()).collect();
                csv_string(self.comment.as_deref(), &h, self.rows.iter().cloned()).into_bytes()
            }
            Format::Json => {
                let v = serde_json::json!({
                    "comment": self.comment,
                    "columns": self.columns,
                    "rows": self.rows,
                });
                json_bytes(&v)
            }
        }
    }
}

pub fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

/// One file produced by a run, relative to the run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub path: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<Output>,
    pub format: Option<Format>,
}

impl Outputs {
    pub fn new(format: Format) -> Self {
        Self {
            files: Vec::new(),
            format: Some(format),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    /// Adds `<stem>.csv` or `<stem>.json`; returns the file name.
    pub fn table(&mut self, stem: &str, t: &Table) -> String {
        let f = self.format();
        let path = format!("{stem}.{}", f.as_str());
        self.files.push(Output {
            path: path.clone(),
            bytes: t.render(f),
        });
        path
    }

    pub fn json<T: Serialize>(&mut self, name: &str, v: &T) {
        self.files.push(Output {
            path: name.to_string(),
            bytes: json_bytes(v),
        });
    }

    pub fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push(Output {
            path: name.to_string(),
            bytes,
        });
    }

    /// Prefix every path with `dir/`.
    pub fn nest(self, dir: &str) -> Vec<Output> {
        self.files
            .into_iter()
            .map(|o| Output {
                path: format!("{dir}/{}", o.path),
                bytes: o.bytes,
            })
            .collect()
    }
}

pub fn sha256_hex(b: &[u8]) -> String {
    hex::encode(Sha256::digest(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub threads: usize,
    pub format: String,
    pub wall_time_s: f64,
    pub warnings: Vec<String>,
    pub outputs: Vec<OutputEntry>,
}

pub const MANIFEST: &str = "manifest.json";

pub fn entries(files: &[Output]) -> Vec<OutputEntry> {
    files
        .iter()
        .map(|o| OutputEntry {
            path: o.path.clone(),
            bytes: o.bytes.len() as u64,
            sha256: sha256_hex(&o.bytes),
        })
        .collect()
}

/// Write every output, then the manifest last.
pub fn write_run(dir: &Path, files: &[Output], manifest: &RunManifest) -> Result<(), CliError> {
    for o in files {
        let p = dir.join(&o.path);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&p, &o.bytes)?;
    }
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(MANIFEST), json_bytes(manifest))?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest, CliError> {
    let p = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&p)
        .map_err(|e| CliError::Config(format!("--check: cannot read {}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("--check: {}: {e}", p.display())))
}

/// Problems found when comparing a fresh run against the stored manifest
/// and the files on disk; empty when everything matches.
pub fn check_run(dir: &Path, fresh: &[Output], stored: &RunManifest) -> Vec<String> {
    let mut problems = Vec::new();
    let now = entries(fresh);
    for e in &stored.outputs {
        match std::fs::read(dir.join(&e.path)) {
            Ok(b) if sha256_hex(&b) == e.sha256 => {}
            Ok(_) => problems.push(format!("{}: file on disk does not match the manifest", e.path)),
            Err(_) => problems.push(format!("{}: listed in the manifest but missing", e.path)),
        }
        match now.iter().find(|n| n.path == e.path) {
            Some(n) if n.sha256 == e.sha256 => {}
            Some(_) => problems.push(format!("{}: re-run produced different content", e.path)),
            None => problems.push(format!("{}: not produced by the re-run", e.path)),
        }
    }
    for n in &now {
        if !stored.outputs.iter().any(|e| e.path == n.path) {
            problems.push(format!("{}: produced by the re-run but absent from the manifest", n.path));
        }
    }
    problems
}
