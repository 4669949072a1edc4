//! CSV cells, output files and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::CliError;

/// Float with 17 significant digits; `inf`/`-inf`/`nan` spelled out.
pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// Accumulates CSV text with LF line endings. Cells never need quoting:
/// they are numbers, booleans or fixed identifiers.
#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut csv = Self::default();
        csv.row(header);
        csv
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        let line: Vec<&str> = cells.iter().map(AsRef::as_ref).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Seed plus where it came from.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeedInfo {
    pub value: u64,
    pub source: &'static str,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub seed: Option<SeedInfo>,
    pub version: &'static str,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<String>,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Files of one run, written under a common prefix.
pub struct Outputs<'a> {
    prefix: &'a Path,
    written: Vec<String>,
}

impl<'a> Outputs<'a> {
    pub fn new(prefix: &'a Path) -> Self {
        Self {
            prefix,
            written: Vec::new(),
        }
    }

    pub fn file(&mut self, suffix: &str, contents: &str) -> Result<(), CliError> {
        let path = with_suffix(self.prefix, suffix);
        write(&path, contents.as_bytes())?;
        self.written.push(path.display().to_string());
        Ok(())
    }

    pub fn manifest(self, mut manifest: RunManifest) -> Result<(), CliError> {
        manifest.outputs = self.written;
        let path = with_suffix(self.prefix, ".manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        write(&path, text.as_bytes())
    }
}
