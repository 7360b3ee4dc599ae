use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::HarnessError;

/// Named columns of reals, in emission order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Format { path: path.to_path_buf(), msg: e.to_string() }
}

/// Header plus one line per row, every value with 17 significant digits.
pub fn emit_csv(table: &Table, path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(path))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(&table.columns).map_err(csv_err(path))?;
    for r in &table.rows {
        w.write_record(r.iter().map(|v| format!("{v:.16e}"))).map_err(csv_err(path))?;
    }
    w.flush().map_err(io(path))
}

pub fn read_csv(path: &Path) -> Result<Table, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let columns: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect();
    let mut out = Table { columns, rows: Vec::new() };
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| HarnessError::Format { path: path.to_path_buf(), msg: format!("{s:?}: {e}") }))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != out.columns.len() {
            return Err(HarnessError::Format { path: path.to_path_buf(), msg: "row width".into() });
        }
        out.rows.push(row);
    }
    Ok(out)
}

/// Run record written next to the CSV outputs.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: Value,
    /// sha256 of the canonical (key-sorted, compact) config JSON.
    pub config_hash: String,
    pub versions: Value,
    pub timings_s: Vec<(String, f64)>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, config: &C) -> Result<Self, HarnessError> {
        let value = serde_json::to_value(config).map_err(|e| HarnessError::BadConfig(e.to_string()))?;
        let config_hash = content_hash(&value);
        let versions = serde_json::json!({
            "modlab-harness": env!("CARGO_PKG_VERSION"),
            "rustc-target": std::env::consts::ARCH,
            "os": std::env::consts::OS,
        });
        Ok(Self { command: command.into(), config: value, config_hash, versions, timings_s: Vec::new(), outputs: Vec::new() })
    }

    pub fn time(&mut self, label: &str, d: Duration) {
        self.timings_s.push((label.into(), d.as_secs_f64()));
    }
}

/// `serde_json::Value` maps are sorted by key, so the compact rendering
/// is canonical.
pub fn content_hash(v: &Value) -> String {
    let text = serde_json::to_string(v).expect("json value renders");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn emit_manifest(m: &Manifest, path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(path))?;
    }
    let text = serde_json::to_string_pretty(m).map_err(|e| HarnessError::Format { path: path.to_path_buf(), msg: e.to_string() })?;
    std::fs::write(path, text + "\n").map_err(io(path))
}
