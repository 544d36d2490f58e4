//! CSV tables and the JSON run manifest.

use crate::config::RunConfig;
use crate::error::CliError;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";

/// Numeric table written with shortest round-trip float formatting.
#[derive(Clone, Debug)]
pub struct CsvTable {
    text: String,
    rows: usize,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            text: format!("{}\n", header.join(",")),
            rows: 0,
        }
    }

    pub fn row(&mut self, vals: &[f64]) {
        for (i, v) in vals.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            let _ = write!(self.text, "{v}");
        }
        self.text.push('\n');
        self.rows += 1;
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn named(self, name: &str) -> (String, String) {
        (name.to_string(), self.text)
    }
}

/// Measured quantities that control the accuracy of the propagators.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Surrogates {
    pub c_hat: Option<f64>,
    pub omega_max: Option<f64>,
    pub tail_estimate: Option<f64>,
    pub eps_spread: Option<Vec<f64>>,
}

/// What a command produced: named file contents, a JSON summary and the surrogates.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
    pub results: serde_json::Value,
    pub surrogates: Surrogates,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub program: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: RunConfig,
    pub surrogates: Surrogates,
    pub results: serde_json::Value,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig, out: &RunOutput) -> Self {
        Manifest {
            manifest_version: 1,
            program: "teukolsky",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: cfg.clone(),
            surrogates: out.surrogates.clone(),
            results: out.results.clone(),
            files: out.files.iter().map(|(n, _)| n.clone()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

fn write(path: PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(&path, text).map_err(|e| CliError::Io { path, source: e })
}

/// Writes every file of `out` and the manifest into `dir`, creating it when needed.
pub fn emit_outputs(command: &str, cfg: &RunConfig, out: &RunOutput, dir: &Path) -> Result<Manifest, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    for (name, text) in &out.files {
        write(dir.join(name), text)?;
    }
    let m = Manifest::new(command, cfg, out);
    write(dir.join(MANIFEST), &m.to_json())?;
    Ok(m)
}
