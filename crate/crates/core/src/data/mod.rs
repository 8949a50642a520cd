//! Recording ingest, preprocessing, dataset splits, the manifest format and
//! the synthetic generators used for desk-scale runs.

mod manifest;
mod phase_only;
mod raw;
mod split;
mod store;
mod synth;

pub use manifest::{label_from_filename, read_manifest, write_manifest, ManifestEntry};
pub use phase_only::{phase_only_generate, phase_only_sample, PhaseOnlyConfig};
pub use raw::{format_complex, parse_complex, parse_raw_recording, preprocess, write_raw_recording, RawRecording};
pub use split::{split, DatasetSplit, Subset};
pub use store::{
    load_dataset_dir, map_path, read_map_index, write_dataset_dir, write_map_file, write_map_index, MapIndexEntry,
    MANIFEST_FILE, MAPS_DIR, MAPS_INDEX_FILE,
};
pub use synth::{
    magnitude_correlation, max_class_correlation, synth_generate, synth_recording, synth_slow_time, ClassParams,
    Envelope, SynthConfig,
};

use crate::dsp::DopplerTimeMap;
use crate::error::{invalid, Result};
use crate::NUM_CLASSES;

/// One preprocessed recording with its activity label.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub id: String,
    pub label: usize,
    pub dtm: DopplerTimeMap,
}

impl LabeledSample {
    pub fn new(id: impl Into<String>, label: usize, dtm: DopplerTimeMap) -> Result<Self> {
        if label >= NUM_CLASSES {
            return invalid(format!("label {label} out of range 0..{NUM_CLASSES}"));
        }
        Ok(Self { id: id.into(), label, dtm })
    }
}

/// Samples together with their partition.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub split: DatasetSplit,
}

impl Dataset {
    /// Splits `samples` (stratified by label) with the given seed. Sample
    /// ids must be unique.
    pub fn new(samples: Vec<LabeledSample>, seed: u64) -> Result<Self> {
        let mut ids: Vec<&str> = samples.iter().map(|s| s.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return invalid(format!("duplicate sample id '{}'", w[0]));
        }
        let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
        let split = split(samples.len(), seed, Some(&labels))?;
        Ok(Self { samples, split })
    }

    pub fn with_split(samples: Vec<LabeledSample>, split: DatasetSplit) -> Result<Self> {
        if split.len() != samples.len() || split.assignment().iter().any(Option::is_none) {
            return invalid("split does not partition the sample set");
        }
        Ok(Self { samples, split })
    }

    pub fn subset(&self, s: Subset) -> Vec<&LabeledSample> {
        self.split.indices(s).iter().map(|&i| &self.samples[i]).collect()
    }
}
