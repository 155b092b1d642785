//! Run manifests: enough provenance to re-run a command and verify its
//! outputs byte for byte.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

pub const MANIFEST_FORMAT_TAG: &str = "coexnet-manifest/1";

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub format: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    /// The subcommand plus its arguments, enough to re-run.
    pub command_line: Vec<String>,
    pub seed: Option<u64>,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    /// Wall-clock seconds per phase. Timings vary run to run; every other
    /// field and every listed output is reproducible.
    pub timings: Vec<(String, f64)>,
}

impl RunManifest {
    pub fn new(command_line: Vec<String>, seed: Option<u64>) -> Self {
        RunManifest {
            format: MANIFEST_FORMAT_TAG,
            tool: "coexnet",
            version: env!("CARGO_PKG_VERSION"),
            command_line,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> std::io::Result<()> {
        self.inputs.push(FileEntry {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn record_output(&mut self, path: &Path) -> std::io::Result<()> {
        self.outputs.push(FileEntry {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn record_timing(&mut self, phase: &str, seconds: f64) {
        self.timings.push((phase.to_string(), seconds));
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn write_file(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json_string())
    }
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write as _;
        let _ = write!(out, "{b:02x}");
    }
    out
}
