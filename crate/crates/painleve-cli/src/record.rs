//! Per-run bookkeeping: emitted files, parameters, timing and outcome.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub outputs: Vec<String>,
    pub timings: BTreeMap<String, f64>,
    pub version: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Output directory plus the list of files written so far.
pub struct Sink {
    dir: PathBuf,
    pub outputs: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path) -> std::io::Result<Sink> {
        fs::create_dir_all(dir)?;
        Ok(Sink { dir: dir.to_path_buf(), outputs: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.outputs.push(path.display().to_string());
        Ok(path)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

pub fn version() -> String {
    format!("painleve-cli {}", env!("CARGO_PKG_VERSION"))
}

/// Writes `run_<command>.json` next to the outputs.
pub fn save(dir: &Path, rec: &RunRecord) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(rec).expect("record serializes");
    fs::write(dir.join(format!("run_{}.json", rec.command)), text)
}
