use std::fs;
use std::path::Path;

use anyhow::Context as _;
use serde::Serialize;

use crate::manifest::RunManifest;

/// An artifact body with its run manifest appended as a `manifest` field.
#[derive(Serialize)]
pub struct WithManifest<'a, T: Serialize> {
    #[serde(flatten)]
    pub body: &'a T,
    pub manifest: &'a RunManifest,
}

pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Writes `body` plus manifest as pretty JSON, creating parent directories.
pub fn write_artifact<T: Serialize>(path: &Path, body: &T, manifest: &RunManifest) -> anyhow::Result<()> {
    write_text(path, &to_json(&WithManifest { body, manifest })?)
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes to stdout; a closed pipe ends the process quietly.
pub fn emit(args: std::fmt::Arguments<'_>) {
    use std::io::Write;
    if let Err(e) = std::io::stdout().lock().write_fmt(args) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        panic!("writing to stdout: {e}");
    }
}
