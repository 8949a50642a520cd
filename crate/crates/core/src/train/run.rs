use std::io::Write;
use std::path::{Path, PathBuf};

use super::{EpochMetrics, PredictionRecord};
use crate::error::{Error, Result};
use crate::NUM_CLASSES;

/// File layout of one run directory.
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub dir: PathBuf,
}

impl RunFiles {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.dir.join("config.ini")
    }

    pub fn metrics(&self) -> PathBuf {
        self.dir.join("metrics.csv")
    }

    /// Parameters of the selected model.
    pub fn checkpoint(&self) -> PathBuf {
        self.dir.join("checkpoint.udpt")
    }

    pub fn final_checkpoint(&self) -> PathBuf {
        self.dir.join("final.udpt")
    }

    pub fn best_checkpoint(&self) -> PathBuf {
        self.dir.join("best.udpt")
    }

    pub fn eval_summary(&self) -> PathBuf {
        self.dir.join("eval.csv")
    }

    pub fn predictions(&self, noisy: bool) -> PathBuf {
        self.dir.join(if noisy { "predictions_0db.csv" } else { "predictions_clean.csv" })
    }

    pub fn create(&self) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        Ok(())
    }
}

pub fn write_config_snapshot(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_metrics_csv<W: Write>(metrics: &[EpochMetrics], mut w: W) -> Result<()> {
    writeln!(w, "epoch,train_loss,val_loss,lr")?;
    for m in metrics {
        writeln!(w, "{},{},{},{}", m.epoch, m.train_loss, m.val_loss, m.lr)?;
    }
    Ok(())
}

const PRED_HEADER: &str = "sample_id,representation,label,predicted,c0,c1,c2,c3,c4,c5";

pub fn write_predictions_csv<W: Write>(records: &[PredictionRecord], mut w: W) -> Result<()> {
    writeln!(w, "{PRED_HEADER}")?;
    for r in records {
        write!(w, "{},{},{},{}", r.sample_id, r.representation, r.label, r.predicted)?;
        for c in r.confidences {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_predictions_csv(text: &str) -> Result<Vec<PredictionRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PRED_HEADER => {}
        _ => return Err(Error::Parse { line: 1, msg: "missing predictions header".into() }),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse { line: i + 1, msg: msg.into() };
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 4 + NUM_CLASSES {
            return Err(err("wrong field count"));
        }
        let label: usize = f[2].parse().map_err(|_| err("bad label"))?;
        let predicted: usize = f[3].parse().map_err(|_| err("bad prediction"))?;
        if label >= NUM_CLASSES || predicted >= NUM_CLASSES {
            return Err(err("class index out of range"));
        }
        let mut confidences = [0.0; NUM_CLASSES];
        for (c, v) in confidences.iter_mut().zip(&f[4..]) {
            *c = v.parse().map_err(|_| err("bad confidence"))?;
        }
        out.push(PredictionRecord {
            sample_id: f[0].to_string(),
            representation: f[1].to_string(),
            predicted,
            label,
            confidences,
        });
    }
    Ok(out)
}
