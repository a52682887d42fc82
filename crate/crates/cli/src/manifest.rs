use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use mmref::checkpoint::sha256_hex;

pub const MANIFEST_FILE: &str = "manifest.json";

/// An input file and the SHA-256 of its bytes at run time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputRef {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputRef {
    pub fn hash(path: &Path) -> Result<InputRef> {
        let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
        Ok(InputRef {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        })
    }
}

/// Written into every artifact directory. Only `started_unix_s` and
/// `wall_clock_s` vary between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: Value,
    pub inputs: BTreeMap<String, InputRef>,
    pub outputs: Vec<PathBuf>,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    pub started_unix_s: u64,
    pub wall_clock_s: f64,
}

/// Collects manifest fields while a command runs.
pub struct Recorder {
    manifest: RunManifest,
    started: Instant,
}

impl Recorder {
    pub fn start(command: &str) -> Recorder {
        Recorder {
            manifest: RunManifest {
                command: command.into(),
                args: std::env::args().skip(1).collect(),
                config: Value::Null,
                inputs: BTreeMap::new(),
                outputs: Vec::new(),
                seeds: Vec::new(),
                tool_version: env!("CARGO_PKG_VERSION").into(),
                started_unix_s: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs()),
                wall_clock_s: 0.0,
            },
            started: Instant::now(),
        }
    }

    pub fn config(&mut self, config: Value) {
        self.manifest.config = config;
    }

    pub fn input(&mut self, role: &str, input: InputRef) {
        self.manifest.inputs.insert(role.into(), input);
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.manifest.outputs.push(path.into());
    }

    pub fn seeds(&mut self, seeds: &[u64]) {
        self.manifest.seeds = seeds.to_vec();
    }

    pub fn snapshot(&self) -> RunManifest {
        let mut m = self.manifest.clone();
        m.wall_clock_s = self.started.elapsed().as_secs_f64();
        m
    }

    /// Writes the manifest into `dir` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        write_manifest(dir, &self.snapshot())
    }
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
