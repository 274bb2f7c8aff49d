use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Record of one run, written as `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub artifact: String,
    pub version: String,
    pub subcommand: String,
    pub config_sha256: String,
    pub wall_time_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

/// Collects output files under an optional directory.
pub struct Outputs {
    dir: Option<PathBuf>,
    files: Vec<OutputFile>,
}

impl Outputs {
    pub fn new(dir: Option<PathBuf>) -> CliResult<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Outputs { dir, files: Vec::new() })
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        std::fs::write(dir.join(name), bytes)?;
        self.files.push(OutputFile { path: name.to_string(), bytes: bytes.len(), sha256: hex(&Sha256::digest(bytes)) });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write(name, &to_json(value)?)
    }

    pub fn csv(&mut self, name: &str, table: Table) -> CliResult<()> {
        self.write(name, &table.into_bytes()?)
    }

    pub fn finish(
        self,
        subcommand: &str,
        config_sha256: String,
        wall_time_seconds: f64,
    ) -> CliResult<Option<RunRecord>> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let record = RunRecord {
            artifact: "latticesir".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config_sha256,
            wall_time_seconds,
            outputs: self.files,
        };
        std::fs::write(dir.join("manifest.json"), to_json(&record)?)?;
        Ok(Some(record))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Rows of strings written through the `csv` crate.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> CliResult<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header.iter().map(|s| s.as_ref())).map_err(csv_err)?;
        Ok(Table { writer })
    }

    /// A table without a header line.
    pub fn bare() -> Self {
        Table { writer: csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new()) }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) -> CliResult<()> {
        self.writer.write_record(cells.iter().map(|s| s.as_ref())).map_err(csv_err)
    }

    pub fn into_bytes(self) -> CliResult<Vec<u8>> {
        self.writer.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn axis_names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}
