use std::io::Write;
use std::path::{Path, PathBuf};

use clam::wsi::{read_bag, RgbImage};
use clam::FeatureBag;

use crate::error::{CliError, Result};

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Writes through a temporary file in the target directory, then renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    create_dir(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Files in `dir` whose names end with `suffix`, sorted by name, paired with
/// the name minus the suffix.
pub fn list_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<(String, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(stem) = name.strip_suffix(suffix) {
            if !stem.is_empty() && entry.path().is_file() {
                out.push((stem.to_string(), entry.path()));
            }
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(CliError::usage(format!("no *{suffix} files in {}", dir.display())));
    }
    Ok(out)
}

pub fn load_image(path: &Path) -> Result<RgbImage> {
    RgbImage::from_ppm(&read(path)?).map_err(|e| with_path(path, e))
}

pub fn load_bag(path: &Path) -> Result<FeatureBag> {
    read_bag(&read(path)?).map_err(|e| with_path(path, e))
}

/// Every `*.bag` in `dir`, in file-name order.
pub fn load_bags(dir: &Path) -> Result<Vec<FeatureBag>> {
    list_with_suffix(dir, ".bag")?
        .iter()
        .map(|(_, path)| load_bag(path))
        .collect()
}

/// Prefixes format errors with the file they came from.
fn with_path(path: &Path, e: clam::ClamError) -> CliError {
    match e {
        clam::ClamError::Format { offset, message } => CliError::Core(clam::ClamError::Format {
            offset,
            message: format!("{}: {message}", path.display()),
        }),
        other => CliError::Core(other),
    }
}

/// `slide_id,value` lines; `#` starts a comment line.
pub fn parse_pairs(text: &str, what: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| CliError::usage(format!("{what} line {}: expected two comma-separated fields", i + 1)))?;
        out.push((a.trim().to_string(), b.trim().to_string()));
    }
    Ok(out)
}
