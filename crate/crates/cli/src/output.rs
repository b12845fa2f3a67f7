//! Result files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commands::Failure;

/// Collects the files written by one run.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        Ok(Outputs { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::io(&path, e))?;
        self.written.push((name.to_string(), hex(&Sha256::digest(bytes))));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Compute(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// CSV from a header and rows of preformatted fields.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| Failure::Compute(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| Failure::Compute(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Compute(e.to_string()))?;
        self.write(name, &bytes)
    }

    pub fn finish(mut self, command: &str, config_text: &str, seed: u64, wall: Duration) -> Result<(), Failure> {
        let started = SystemTime::now().checked_sub(wall).unwrap_or(UNIX_EPOCH);
        let manifest = Manifest {
            command: command.to_string(),
            config_sha256: hex(&Sha256::digest(config_text.as_bytes())),
            seed,
            lsgate_version: lsgate::VERSION.to_string(),
            cli_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_s: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            wall_time_s: wall.as_secs_f64(),
            outputs: self.written.iter().map(|(f, h)| OutputFile { file: f.clone(), sha256: h.clone() }).collect(),
            config: config_text.to_string(),
        };
        let name = format!("{}-manifest.json", command.replace(' ', "-"));
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Compute(e.to_string()))?;
        let path = self.dir.join(&name);
        fs::write(&path, text + "\n").map_err(|e| Failure::io(&path, e))?;
        self.written.clear();
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    config_sha256: String,
    seed: u64,
    lsgate_version: String,
    cli_version: String,
    started_unix_s: f64,
    wall_time_s: f64,
    outputs: Vec<OutputFile>,
    config: String,
}

#[derive(Serialize)]
struct OutputFile {
    file: String,
    sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-trip rendering of a float.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}
