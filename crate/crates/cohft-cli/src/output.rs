//! Artifact writing: temp-then-rename, plus the run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Pretty JSON with a trailing newline; keys are sorted (serde_json maps are ordered).
pub fn render(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Files produced by one run, written only after the whole computation succeeded.
#[derive(Default)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, v: &Value) {
        self.files.insert(name.to_string(), render(v));
    }

    /// Single-line JSON, for large tables.
    pub fn add_compact(&mut self, name: &str, v: &Value) {
        let mut s = serde_json::to_vec(v).expect("serializable");
        s.push(b'\n');
        self.files.insert(name.to_string(), s);
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.files.keys()
    }

    /// Writes every artifact and then `manifest.json`; returns the manifest path.
    pub fn commit(self, dir: &Path, mut manifest: Manifest) -> Result<PathBuf, CliError> {
        for (name, bytes) in &self.files {
            manifest.outputs.insert(name.clone(), sha256_hex(bytes));
        }
        for (name, bytes) in &self.files {
            write_atomic(&dir.join(name), bytes)?;
        }
        let path = dir.join("manifest.json");
        write_atomic(&path, &render(&manifest.to_json()))?;
        Ok(path)
    }
}

pub struct Manifest {
    pub command: String,
    pub inputs_hash: String,
    pub seed: u64,
    pub backend: String,
    pub threads: usize,
    pub outputs: BTreeMap<String, String>,
    pub elapsed: Duration,
}

impl Manifest {
    /// Everything except timing; this is what `manifest_hash` covers.
    fn stable_part(&self) -> Value {
        json!({
            "command": self.command,
            "inputs_hash": self.inputs_hash,
            "seed": self.seed,
            "backend": self.backend,
            "versions": {
                "cohft": cohft::VERSION,
                "cohft-cli": env!("CARGO_PKG_VERSION"),
                "config_schema": crate::config::SCHEMA_VERSION,
            },
            "outputs": self.outputs,
        })
    }

    pub fn to_json(&self) -> Value {
        let stable = self.stable_part();
        let hash = sha256_hex(&render(&stable));
        let mut v = stable;
        v["manifest_hash"] = Value::String(hash);
        v["timing"] = json!({"wall_seconds": self.elapsed.as_secs_f64(), "threads": self.threads});
        v
    }
}
