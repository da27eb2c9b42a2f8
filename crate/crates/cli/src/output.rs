//! Output directory handling: digest header lines, CSV writing and the run
//! manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

/// sha256 of the configuration as compact JSON with sorted keys. Key order
/// in the source file and defaulted keys do not change it.
pub fn config_digest(config: &Config) -> String {
    let canonical = serde_json::to_value(config).expect("configuration serializes");
    let text = serde_json::to_string(&canonical).expect("json value serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Formats a float with the shortest representation that parses back to
/// the same value.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && (a >= 1e16 || a < 1e-5) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[derive(Serialize)]
pub struct Units {
    pub tau0_s: f64,
    pub hbar_omega_j: f64,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    config_digest: &'a str,
    engine_version: &'a str,
    command: &'a str,
    units: Option<&'a Units>,
    wall_clock_s: f64,
    outputs: &'a [String],
    summary: &'a Value,
    config: &'a Config,
}

/// Collects the files written by one command and writes the manifest last.
pub struct OutputDir {
    dir: PathBuf,
    digest: String,
    config: Config,
    command: &'static str,
    files: Vec<String>,
    started: Instant,
}

impl OutputDir {
    pub fn create(dir: &Path, config: &Config, command: &'static str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            digest: config_digest(config),
            config: config.clone(),
            command,
            files: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Opens a CSV file whose first line is the digest header.
    pub fn csv(&mut self, name: &str, columns: &[&str]) -> Result<CsvOut, CliError> {
        let mut file = BufWriter::new(File::create(self.dir.join(name))?);
        writeln!(file, "# manifest sha256:{}", self.digest)?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(columns).map_err(csv_err)?;
        self.files.push(name.to_string());
        Ok(CsvOut {
            writer,
            width: columns.len(),
        })
    }

    pub fn write_manifest(&self, units: Option<&Units>, summary: &Value) -> Result<(), CliError> {
        let manifest = RunManifest {
            config_digest: &self.digest,
            engine_version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            units,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            outputs: &self.files,
            summary,
            config: &self.config,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(self.dir.join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }

    pub fn write_diagnostics(&self, error: &sympcool::Error, extra: Value) -> Result<(), CliError> {
        let mut doc = json!({
            "config_digest": self.digest,
            "command": self.command,
            "error": error.to_string(),
        });
        if let sympcool::Error::InvariantViolation { tau, state, .. } = error {
            doc["tau"] = json!(tau);
            doc["last_state"] = serde_json::to_value(state.as_ref()).expect("state serializes");
        }
        if let (Value::Object(doc), Value::Object(extra)) = (&mut doc, extra) {
            doc.extend(extra);
        }
        let text = serde_json::to_string_pretty(&doc).expect("diagnostics serialize");
        std::fs::write(self.dir.join(DIAGNOSTICS_FILE), text + "\n")?;
        Ok(())
    }
}

pub struct CsvOut {
    writer: csv::Writer<BufWriter<File>>,
    width: usize,
}

impl CsvOut {
    pub fn row(&mut self, values: &[String]) -> Result<(), CliError> {
        debug_assert_eq!(values.len(), self.width);
        self.writer.write_record(values).map_err(csv_err)
    }

    pub fn flush(&mut self) -> Result<(), CliError> {
        Ok(self.writer.flush()?)
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}
