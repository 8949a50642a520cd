use std::fs;
use std::path::Path;

use super::{read_manifest, write_manifest, Dataset, DatasetSplit, LabeledSample, ManifestEntry, Subset};
use crate::error::{Error, Result};
use crate::repr::{read_complex_map, write_complex_map};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const MAPS_INDEX_FILE: &str = "maps.csv";
pub const MAPS_DIR: &str = "maps";

/// Per-map metadata kept next to the manifest: source content hash and the
/// axes needed to rebuild the map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapIndexEntry {
    pub id: String,
    pub source_hash: String,
    pub duration_s: f64,
    pub doppler_span_hz: f64,
}

pub fn write_map_index(entries: &[MapIndexEntry], path: &Path) -> Result<()> {
    let mut s = String::from("id,source_hash,duration_s,doppler_span_hz\n");
    for e in entries {
        s.push_str(&format!("{},{},{},{}\n", e.id, e.source_hash, e.duration_s, e.doppler_span_hz));
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn read_map_index(path: &Path) -> Result<Vec<MapIndexEntry>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse { line: i + 1, msg: msg.into() };
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 4 {
            return Err(err("expected 4 fields"));
        }
        out.push(MapIndexEntry {
            id: f[0].to_string(),
            source_hash: f[1].to_string(),
            duration_s: f[2].parse().map_err(|_| err("bad duration"))?,
            doppler_span_hz: f[3].parse().map_err(|_| err("bad Doppler span"))?,
        });
    }
    Ok(out)
}

pub fn map_path(id: &str) -> String {
    format!("{MAPS_DIR}/{id}.udcs")
}

pub fn write_map_file(dir: &Path, s: &LabeledSample) -> Result<()> {
    let mut buf = Vec::new();
    write_complex_map(&s.dtm, &mut buf)?;
    fs::write(dir.join(map_path(&s.id)), buf)?;
    Ok(())
}

/// Writes maps, the map index and the manifest for an in-memory dataset.
pub fn write_dataset_dir(data: &Dataset, dir: &Path, source_hashes: Option<&[String]>) -> Result<()> {
    fs::create_dir_all(dir.join(MAPS_DIR))?;
    let assignment = data.split.assignment();
    let mut index = Vec::with_capacity(data.samples.len());
    let mut manifest = Vec::with_capacity(data.samples.len());
    for (i, s) in data.samples.iter().enumerate() {
        write_map_file(dir, s)?;
        index.push(MapIndexEntry {
            id: s.id.clone(),
            source_hash: source_hashes.map(|h| h[i].clone()).unwrap_or_else(|| "-".into()),
            duration_s: s.dtm.duration_s(),
            doppler_span_hz: s.dtm.doppler_span_hz(),
        });
        manifest.push(ManifestEntry {
            id: s.id.clone(),
            label: s.label,
            split: assignment[i].expect("split covers every sample"),
            path: map_path(&s.id),
        });
    }
    write_map_index(&index, &dir.join(MAPS_INDEX_FILE))?;
    write_manifest(&manifest, fs::File::create(dir.join(MANIFEST_FILE))?)?;
    Ok(())
}

/// Loads a preprocessed dataset directory with the split recorded in its
/// manifest.
pub fn load_dataset_dir(dir: &Path) -> Result<Dataset> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = read_manifest(&fs::read_to_string(&manifest_path).map_err(|e| {
        Error::InvalidArgument(format!("cannot read {}: {e}", manifest_path.display()))
    })?)?;
    let index = read_map_index(&dir.join(MAPS_INDEX_FILE))?;
    let meta: std::collections::HashMap<&str, &MapIndexEntry> = index.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut samples = Vec::with_capacity(manifest.len());
    let mut split = DatasetSplit { train: vec![], val: vec![], test: vec![], seed: 0 };
    for (i, e) in manifest.iter().enumerate() {
        let m = meta
            .get(e.id.as_str())
            .ok_or_else(|| Error::Format(format!("map index has no entry for '{}'", e.id)))?;
        let bytes = fs::read(dir.join(&e.path))?;
        let dtm = read_complex_map(bytes.as_slice(), m.duration_s, m.doppler_span_hz)?;
        samples.push(LabeledSample::new(e.id.clone(), e.label, dtm)?);
        match e.split {
            Subset::Train => split.train.push(i),
            Subset::Val => split.val.push(i),
            Subset::Test => split.test.push(i),
        }
    }
    Dataset::with_split(samples, split)
}
