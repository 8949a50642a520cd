//! Training and evaluation loops for the single-domain, multi-domain and
//! meta experiments, plus the run-directory file formats.

mod bank;
mod eval;
mod loops;
mod run;

pub use bank::FeatureBank;
pub use eval::{
    accuracy, evaluate, evaluate_clean_and_noisy, Classifier, EvalResult, MetaClassifier, MultiView, NoiseSpec,
    PredictionRecord,
};
pub use loops::{
    train_meta, train_multi, train_single, EpochMetrics, MetaBase, MetaRun, MultiRun, SingleRun,
};
pub use run::{
    read_predictions_csv, write_config_snapshot, write_metrics_csv, write_predictions_csv, RunFiles,
};

use crate::error::{invalid, Result};
use crate::nn::{EncoderSpec, DEFAULT_LEAKY_SLOPE};

/// Which parameters a run reports and exports as its model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSelection {
    /// Parameters after the last epoch.
    Final,
    /// Parameters of the epoch with the lowest validation loss.
    BestValidation,
}

impl ModelSelection {
    pub fn name(self) -> &'static str {
        match self {
            ModelSelection::Final => "final",
            ModelSelection::BestValidation => "best",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "final" => Some(Self::Final),
            "best" | "best-validation" => Some(Self::BestValidation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub seed: u64,
    pub leaky_slope: f64,
    /// All loops are single-threaded with seeded shuffles, so runs are
    /// always reproducible; the flag is recorded in run snapshots.
    pub deterministic: bool,
    pub head_bias: bool,
    pub selection: ModelSelection,
    pub widths: [usize; 5],
    pub embed_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 64,
            lr: 1e-4,
            plateau_factor: 0.5,
            plateau_patience: 4,
            seed: 0,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            deterministic: true,
            head_bias: true,
            selection: ModelSelection::Final,
            widths: [32, 64, 128, 256, 512],
            embed_dim: 128,
        }
    }
}

/// Default epoch counts of the three experiment families.
pub const SINGLE_EPOCHS: usize = 50;
pub const MULTI_EPOCHS: usize = 125;
pub const META_EPOCHS: usize = 10;

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return invalid("epochs must be positive");
        }
        if self.batch_size < 2 {
            return invalid(format!("batch size must be at least 2, got {}", self.batch_size));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return invalid(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return invalid(format!("plateau factor must lie in (0, 1), got {}", self.plateau_factor));
        }
        if !(self.leaky_slope.is_finite() && self.leaky_slope >= 0.0) {
            return invalid(format!("leaky slope must be non-negative, got {}", self.leaky_slope));
        }
        if self.widths.contains(&0) || self.embed_dim == 0 {
            return invalid("encoder widths and embedding size must be positive");
        }
        Ok(())
    }

    pub fn encoder_spec(&self, in_ch: usize) -> EncoderSpec {
        EncoderSpec {
            in_ch,
            widths: self.widths,
            input_size: crate::dsp::MAP_SIZE,
            embed_dim: self.embed_dim,
        }
    }
}
