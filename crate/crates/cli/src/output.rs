//! Output plumbing: atomic file writes and the run manifest.
//!
//! Data files are written to a temporary sibling and renamed into place, so
//! readers never observe a partial file. CSV output is comma-separated with
//! a header row, `\n` line endings, no trailing delimiter, and numbers in
//! shortest round-trip decimal notation. The manifest is written exactly
//! once per run, after every data file has landed.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::AppError;

/// Identity of one run: what was executed, the digest of the fully resolved
/// configuration it ran with, and the files it produced.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub config_digest: String,
    pub master_seed: u64,
    pub tool_version: &'static str,
    pub output_paths: Vec<String>,
}

fn io_error(path: &Path, e: std::io::Error) -> AppError {
    AppError::Run(format!("cannot write {}: {e}", path.display()))
}

/// Writes `contents` to `dir/name` through a temporary sibling plus rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), AppError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let tmp = dir.join(format!("{name}.tmp"));
    let path = dir.join(name);
    fs::write(&tmp, contents).map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| io_error(&path, e))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| AppError::Run(format!("cannot serialize {name}: {e}")))?;
    text.push('\n');
    write_atomic(dir, name, &text)
}

/// Writes `manifest.json`. `output_paths` lists the data files of this run,
/// relative to the output directory; the manifest itself is not listed.
pub fn write_manifest(
    dir: &Path,
    command: &'static str,
    config_digest: String,
    master_seed: u64,
    output_paths: &[&str],
) -> Result<(), AppError> {
    let manifest = RunManifest {
        command,
        config_digest,
        master_seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        output_paths: output_paths.iter().map(|p| p.to_string()).collect(),
    };
    write_json(dir, "manifest.json", &manifest)
}
