//! Post-hoc analyses over per-sample predictions of several
//! representations: error agreement, unique-correct counts, the oracle
//! upper bound, the potential margin, and class saliency aggregation.

mod report;
mod saliency;
mod tables;

pub use report::{
    reference, short_label, write_accuracy_csv, write_agreement_csv, write_meta_csv, write_report,
    write_unique_csv, AccuracyRow, MetaRow, ReportInputs,
};
pub use saliency::{aggregate_multi_saliency, aggregate_saliency, ClassSaliency};
pub use tables::{
    error_agreement_matrix, oracle_upper_bound, potential_margin, unique_correct_counts, AgreementMode,
    AgreementTable, Margin, UniqueCounts, UpperBound,
};

use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::train::PredictionRecord;
use crate::NUM_CLASSES;

/// Predictions of several representations over one common sample set,
/// sorted by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSet {
    pub representations: Vec<String>,
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    /// `predictions[r][i]`: class predicted by representation `r` for
    /// sample `i`.
    pub predictions: Vec<Vec<usize>>,
}

impl RecordSet {
    /// Aligns one record list per representation by sample id. Sample sets
    /// must match exactly and labels must agree.
    pub fn align(groups: &[Vec<PredictionRecord>]) -> Result<Self> {
        if groups.is_empty() {
            return invalid("no prediction records to analyse");
        }
        let mut representations = Vec::new();
        let mut maps: Vec<BTreeMap<&str, &PredictionRecord>> = Vec::new();
        for g in groups {
            let Some(first) = g.first() else {
                return invalid("empty prediction record list");
            };
            if representations.contains(&first.representation) {
                return invalid(format!("representation '{}' given twice", first.representation));
            }
            let mut m = BTreeMap::new();
            for r in g {
                if r.representation != first.representation {
                    return invalid(format!(
                        "mixed representations '{}' and '{}' in one record list",
                        first.representation, r.representation
                    ));
                }
                if r.label >= NUM_CLASSES || r.predicted >= NUM_CLASSES {
                    return invalid(format!("class index out of range for sample '{}'", r.sample_id));
                }
                if m.insert(r.sample_id.as_str(), r).is_some() {
                    return invalid(format!("sample '{}' appears twice for '{}'", r.sample_id, first.representation));
                }
            }
            representations.push(first.representation.clone());
            maps.push(m);
        }
        let ids: Vec<String> = maps[0].keys().map(|s| s.to_string()).collect();
        for (r, m) in maps.iter().enumerate().skip(1) {
            let missing: Vec<&str> = ids.iter().map(String::as_str).filter(|id| !m.contains_key(id)).collect();
            let extra: Vec<&str> = m.keys().copied().filter(|id| !maps[0].contains_key(id)).collect();
            if !missing.is_empty() || !extra.is_empty() {
                let mut names: Vec<&str> = missing.into_iter().chain(extra).collect();
                names.truncate(10);
                return Err(Error::InvalidArgument(format!(
                    "sample sets of '{}' and '{}' differ, e.g. {}",
                    representations[0],
                    representations[r],
                    names.join(", ")
                )));
            }
        }
        let labels: Vec<usize> = ids.iter().map(|id| maps[0][id.as_str()].label).collect();
        for (r, m) in maps.iter().enumerate() {
            if let Some(id) = ids.iter().zip(&labels).find(|(id, &l)| m[id.as_str()].label != l).map(|p| p.0) {
                return invalid(format!("label of '{id}' differs under '{}'", representations[r]));
            }
        }
        let predictions = maps
            .iter()
            .map(|m| ids.iter().map(|id| m[id.as_str()].predicted).collect())
            .collect();
        Ok(Self { representations, ids, labels, predictions })
    }

    /// Builds a set directly from label and prediction arrays.
    pub fn from_predictions(
        representations: Vec<String>,
        labels: Vec<usize>,
        predictions: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if representations.len() != predictions.len() || predictions.iter().any(|p| p.len() != labels.len()) {
            return invalid("prediction table shape does not match labels and representations");
        }
        if labels.iter().chain(predictions.iter().flatten()).any(|&c| c >= NUM_CLASSES) {
            return invalid("class index out of range");
        }
        let ids = (0..labels.len()).map(|i| format!("s{i:05}")).collect();
        Ok(Self { representations, ids, labels, predictions })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn correct(&self, r: usize, i: usize) -> bool {
        self.predictions[r][i] == self.labels[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.representations.iter().position(|r| r == name)
    }
}
