use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use encost_core::descriptors::TOOL_VERSION;

/// Provenance embedded in every output artifact.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub config: Map<String, Value>,
    pub tool_version: String,
    pub dataset_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: &[PathBuf], created_at: Option<String>) -> io::Result<Self> {
        Ok(RunManifest {
            command: command.to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            config: Map::new(),
            tool_version: TOOL_VERSION.to_string(),
            dataset_hash: dataset_hash(inputs)?,
            created_at,
        })
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        let v = serde_json::to_value(value).expect("config values serialize");
        self.config.insert(key.to_string(), v);
        self
    }
}

/// Files behind `path`: the file itself, or a directory's regular files in name order.
fn expand(path: &Path) -> io::Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(path)? {
            let p = entry?.path();
            if p.is_file() {
                files.push(p);
            }
        }
        files.sort();
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

/// SHA-256 over the length-prefixed contents of every input file.
pub fn dataset_hash(inputs: &[PathBuf]) -> io::Result<String> {
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    for input in inputs {
        for file in expand(input)? {
            let mut f = File::open(&file).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", file.display())))?;
            hasher.update(f.metadata()?.len().to_le_bytes());
            loop {
                let n = f.read(&mut buf)?;
                if n == 0 {
                    break;
                }
                hasher.update(&buf[..n]);
            }
        }
    }
    Ok(hex::encode(hasher.finalize()))
}
