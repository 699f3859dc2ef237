//! Atomic artifact writing with embedded run metadata.
//!
//! Every artifact is written to a temporary file in the destination
//! directory and renamed into place, and carries the resolved run
//! configuration so the run can be reproduced from the artifact alone.
//! Nothing time-dependent is embedded: identical config and seed yield
//! byte-identical files.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub const TOOL_NAME: &str = "feedfx";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Run provenance embedded in every artifact.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
}

impl Meta {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            seed,
            config,
        }
    }
}

/// Writes bytes atomically (temp file + rename in the same directory).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::usage(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::from(e)
    })
}

/// Serializes a JSON artifact with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(doc)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Prefixes CSV bytes with a `# meta: {...}` comment line.
pub fn write_csv_with_meta(path: &Path, meta: &Meta, csv_bytes: &[u8]) -> Result<(), CliError> {
    let mut bytes = format!("# meta: {}\n", serde_json::to_string(meta)?).into_bytes();
    bytes.extend_from_slice(csv_bytes);
    write_atomic(path, &bytes)
}

/// Reads the `# meta:` comment back from a CSV artifact, if present.
pub fn read_csv_meta(content: &str) -> Option<Meta> {
    let line = content.lines().next()?;
    let json = line.strip_prefix("# meta: ")?;
    serde_json::from_str(json).ok()
}
