use crate::autograd::{Graph, Mode, Real, Tensor};
use crate::data::LabeledSample;
use crate::dsp::{add_noise_snr, DopplerTimeMap};
use crate::error::{invalid, Result};
use crate::nn::{domain_short_name, Domain, MetaModule, MultiDomainModel, SingleDomainModel};
use crate::repr::ReprFormat;
use crate::seed::rng_for;
use crate::NUM_CLASSES;

use super::{FeatureBank, MetaBase};

/// Samples per forward pass during evaluation.
pub const EVAL_CHUNK: usize = 32;

/// One model's verdict on one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub representation: String,
    pub predicted: usize,
    pub label: usize,
    pub confidences: [f64; NUM_CLASSES],
}

impl PredictionRecord {
    pub fn correct(&self) -> bool {
        self.predicted == self.label
    }
}

/// Index of the largest entry; the first one on ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Anything that maps Doppler-time maps to class logits.
pub trait Classifier {
    fn name(&self) -> String;
    fn logits(&mut self, maps: &[&DopplerTimeMap]) -> Result<Vec<[f64; NUM_CLASSES]>>;
}

pub(crate) fn rows_of<F: Real>(t: &Tensor<F>) -> Vec<[f64; NUM_CLASSES]> {
    t.data()
        .chunks(NUM_CLASSES)
        .map(|c| std::array::from_fn(|i| c[i].as_f64()))
        .collect()
}

impl<F: Real> Classifier for SingleDomainModel<F> {
    fn name(&self) -> String {
        self.format.name().to_string()
    }

    fn logits(&mut self, maps: &[&DopplerTimeMap]) -> Result<Vec<[f64; NUM_CLASSES]>> {
        let bank = FeatureBank::<F>::from_maps(maps.iter().copied(), self.format)?;
        let idx: Vec<usize> = (0..maps.len()).collect();
        let mut g = Graph::new();
        let x = g.input(bank.batch(&idx)?)?;
        let out = SingleDomainModel::logits(self, &mut g, x, Mode::Eval)?;
        Ok(rows_of(g.value(out)))
    }
}

/// The multi-domain model restricted to a subset of its encoders.
pub struct MultiView<'a, F: Real> {
    pub model: &'a mut MultiDomainModel<F>,
    pub active: Vec<Domain>,
}

impl<'a, F: Real> MultiView<'a, F> {
    pub fn new(model: &'a mut MultiDomainModel<F>, active: &[Domain]) -> Result<Self> {
        if active.is_empty() {
            return invalid("a multi-domain view needs at least one domain");
        }
        Ok(Self { model, active: active.to_vec() })
    }

    pub fn for_format(model: &'a mut MultiDomainModel<F>, format: ReprFormat) -> Result<Self> {
        Self::new(model, format.kinds())
    }
}

/// Name of the format whose channels are exactly `active`, else the joined
/// short domain names.
pub fn subset_name(active: &[Domain]) -> String {
    let mut want = active.to_vec();
    want.sort_by_key(|d| *d as usize);
    for f in ReprFormat::ALL {
        let mut k = f.kinds().to_vec();
        k.sort_by_key(|d| *d as usize);
        if k == want {
            return f.name().to_string();
        }
    }
    active.iter().map(|&d| domain_short_name(d)).collect::<Vec<_>>().join("+")
}

impl<F: Real> Classifier for MultiView<'_, F> {
    fn name(&self) -> String {
        subset_name(&self.active)
    }

    fn logits(&mut self, maps: &[&DopplerTimeMap]) -> Result<Vec<[f64; NUM_CLASSES]>> {
        let idx: Vec<usize> = (0..maps.len()).collect();
        let mut g = Graph::new();
        let mut inputs = Vec::new();
        for &d in &self.active {
            let bank = FeatureBank::<F>::from_maps(maps.iter().copied(), ReprFormat::single(d))?;
            inputs.push((d, g.input(bank.batch(&idx)?)?));
        }
        let out = self.model.logits(&mut g, &inputs, &self.active, Mode::Eval)?;
        Ok(rows_of(g.value(out)))
    }
}

/// A trained meta module on top of its frozen base.
pub struct MetaClassifier<'a, F: Real> {
    pub base: &'a mut MetaBase<F>,
    pub meta: &'a MetaModule<F>,
}

impl<F: Real> Classifier for MetaClassifier<'_, F> {
    fn name(&self) -> String {
        format!("meta-{}-{}", self.meta.input.name(), self.meta.activation.name())
    }

    fn logits(&mut self, maps: &[&DopplerTimeMap]) -> Result<Vec<[f64; NUM_CLASSES]>> {
        let feats = self.base.features(maps, self.meta.input)?;
        Ok(rows_of(&self.meta.apply(&feats)?))
    }
}

/// Additive complex Gaussian noise at a fixed SNR, seeded per sample id so
/// every model sees the same realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn apply(&self, s: &LabeledSample) -> Result<DopplerTimeMap> {
        let mut rng = rng_for(self.seed, &format!("noise/{}", s.id));
        add_noise_snr(&s.dtm, self.snr_db, &mut rng)
    }
}

/// Predictions of `clf` on `samples`, optionally with noise added to each
/// complex map before format conversion.
pub fn evaluate<C: Classifier + ?Sized>(
    clf: &mut C,
    samples: &[&LabeledSample],
    noise: Option<NoiseSpec>,
) -> Result<Vec<PredictionRecord>> {
    if samples.is_empty() {
        return invalid("cannot evaluate on an empty sample set");
    }
    let name = clf.name();
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(EVAL_CHUNK) {
        let noisy: Vec<DopplerTimeMap> = match noise {
            Some(n) => chunk.iter().map(|s| n.apply(s)).collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let maps: Vec<&DopplerTimeMap> = if noise.is_some() {
            noisy.iter().collect()
        } else {
            chunk.iter().map(|s| &s.dtm).collect()
        };
        for (s, l) in chunk.iter().zip(clf.logits(&maps)?) {
            out.push(PredictionRecord {
                sample_id: s.id.clone(),
                representation: name.clone(),
                predicted: argmax(&l),
                label: s.label,
                confidences: l,
            });
        }
    }
    Ok(out)
}

/// Fraction of correct records.
pub fn accuracy(records: &[PredictionRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().filter(|r| r.correct()).count() as f64 / records.len() as f64
}

/// Clean and noisy test accuracy with the per-sample records behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub representation: String,
    pub accuracy_clean: f64,
    pub accuracy_noisy: f64,
    pub snr_db: f64,
    pub noise_seed: u64,
    pub clean: Vec<PredictionRecord>,
    pub noisy: Vec<PredictionRecord>,
}

/// Evaluation at 0 dB SNR and without noise.
pub fn evaluate_clean_and_noisy<C: Classifier + ?Sized>(
    clf: &mut C,
    samples: &[&LabeledSample],
    noise_seed: u64,
) -> Result<EvalResult> {
    let snr_db = 0.0;
    let clean = evaluate(clf, samples, None)?;
    let noisy = evaluate(clf, samples, Some(NoiseSpec { snr_db, seed: noise_seed }))?;
    Ok(EvalResult {
        representation: clf.name(),
        accuracy_clean: accuracy(&clean),
        accuracy_noisy: accuracy(&noisy),
        snr_db,
        noise_seed,
        clean,
        noisy,
    })
}
