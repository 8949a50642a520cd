use std::io::Write;

use super::Subset;
use crate::error::{invalid, Error, Result};
use crate::CLASS_NAMES;

/// One line of a preprocessed dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub label: usize,
    pub split: Subset,
    /// Path of the cached map, relative to the manifest directory.
    pub path: String,
}

const HEADER: &str = "id,label,split,path";

pub fn write_manifest<W: Write>(entries: &[ManifestEntry], mut w: W) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    for e in entries {
        if [&e.id, &e.path].iter().any(|s| s.contains([',', '\n'])) {
            return invalid(format!("manifest field of '{}' contains a separator", e.id));
        }
        writeln!(w, "{},{},{},{}", e.id, e.label, e.split.name(), e.path)?;
    }
    Ok(())
}

pub fn read_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: format!("expected header '{HEADER}'") }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, got {}", f.len())));
        }
        let label: usize = f[1].parse().map_err(|_| err(format!("bad label '{}'", f[1])))?;
        if label >= CLASS_NAMES.len() {
            return Err(err(format!("label {label} out of range")));
        }
        let split = Subset::parse(f[2]).ok_or_else(|| err(format!("bad split '{}'", f[2])))?;
        out.push(ManifestEntry { id: f[0].to_string(), label, split, path: f[3].to_string() });
    }
    Ok(out)
}

/// Label from a `<class>_<id>.rad` file name.
pub fn label_from_filename(name: &str) -> Result<usize> {
    let stem = name.strip_suffix(".rad").unwrap_or(name);
    let Some((class, id)) = stem.rsplit_once('_') else {
        return invalid(format!("file name '{name}' is not <class>_<id>.rad"));
    };
    if id.is_empty() {
        return invalid(format!("file name '{name}' has an empty id"));
    }
    CLASS_NAMES
        .iter()
        .position(|&c| c == class)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown class '{class}' in '{name}'")))
}
