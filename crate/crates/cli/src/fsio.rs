use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use florimeter_core::annotio::is_valid_id;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::read(path, e))
}

pub fn write(path: &Path, body: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, body).map_err(|e| CliError::write(path, e))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))
}

/// `*.txt` files of a directory keyed by file stem (the image id).
pub fn txt_files(dir: &Path) -> CliResult<BTreeMap<String, PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::read(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::read(dir, e))?.path();
        if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        if !is_valid_id(&stem) {
            return Err(CliError::invalid(format!(
                "{}: image id '{stem}' must use only [A-Za-z0-9_-]",
                path.display()
            )));
        }
        out.insert(stem, path);
    }
    Ok(out)
}
