use rand::seq::SliceRandom;

use super::eval::EVAL_CHUNK;
use super::{FeatureBank, ModelSelection, TrainConfig};
use crate::autograd::{Adam, Graph, Mode, ParamStore, PlateauScheduler, Real, Tensor, Var};
use crate::data::{Dataset, LabeledSample, Subset};
use crate::dsp::DopplerTimeMap;
use crate::error::{invalid, Error, Result};
use crate::nn::{
    sample_domains, Domain, MetaActivation, MetaInput, MetaModule, MultiDomainModel, SingleDomainModel, DOMAINS,
};
use crate::repr::ReprFormat;
use crate::seed::{content_hash, rng_for};

/// One row of a run's metrics file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

/// Shuffled mini-batches of `0..n`. A trailing batch of one sample is
/// dropped because batch norm cannot standardize a single value.
fn epoch_batches(n: usize, batch_size: usize, seed: u64, tag: &str, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, &format!("shuffle/{tag}/{epoch}")));
    order
        .chunks(batch_size)
        .filter(|c| c.len() >= 2)
        .map(<[usize]>::to_vec)
        .collect()
}

fn labels_of(samples: &[&LabeledSample]) -> Vec<usize> {
    samples.iter().map(|s| s.label).collect()
}

fn maps_of<'a>(samples: &[&'a LabeledSample]) -> Vec<&'a DopplerTimeMap> {
    samples.iter().map(|s| &s.dtm).collect()
}

fn split_sets(data: &Dataset) -> Result<(Vec<&LabeledSample>, Vec<&LabeledSample>)> {
    let train = data.subset(Subset::Train);
    let val = data.subset(Subset::Val);
    if train.len() < 2 || val.is_empty() {
        return invalid(format!(
            "need at least 2 training and 1 validation samples, got {} and {}",
            train.len(),
            val.len()
        ));
    }
    Ok((train, val))
}

/// Per-epoch bookkeeping shared by the three loops.
struct Progress<F: Real> {
    adam: Adam,
    sched: PlateauScheduler,
    metrics: Vec<EpochMetrics>,
    best: Option<(f64, usize, ParamStore<F>)>,
}

impl<F: Real> Progress<F> {
    fn new(cfg: &TrainConfig) -> Result<Self> {
        Ok(Self {
            adam: Adam::new(cfg.lr)?,
            sched: PlateauScheduler::new(cfg.lr, cfg.plateau_factor, cfg.plateau_patience)?,
            metrics: Vec::new(),
            best: None,
        })
    }

    fn finish_epoch(&mut self, epoch: usize, train_loss: f64, val_loss: f64, store: &ParamStore<F>) {
        let lr = self.adam.lr;
        self.metrics.push(EpochMetrics { epoch, train_loss, val_loss, lr });
        self.adam.lr = self.sched.step(val_loss);
        if self.best.as_ref().is_none_or(|(b, _, _)| val_loss < *b) {
            self.best = Some((val_loss, epoch, store.clone()));
        }
    }

    fn into_parts(self) -> (Vec<EpochMetrics>, usize, ParamStore<F>) {
        let (_, epoch, store) = self.best.expect("at least one epoch ran");
        (self.metrics, epoch, store)
    }
}

fn step_loss<F: Real>(g: &mut Graph<F>, logits: Var, labels: &[usize], store: &mut ParamStore<F>) -> Result<f64> {
    let loss = g.softmax_cross_entropy(logits, labels)?;
    g.backward(loss)?;
    store.zero_grads();
    g.write_grads(store);
    Ok(g.value(loss).item().as_f64())
}

fn select<F: Real>(sel: ModelSelection, final_store: &ParamStore<F>, best: &ParamStore<F>) -> ParamStore<F> {
    match sel {
        ModelSelection::Final => final_store.clone(),
        ModelSelection::BestValidation => best.clone(),
    }
}

/// Result of a single-domain run.
#[derive(Debug, Clone)]
pub struct SingleRun<F: Real> {
    /// Model with the parameters after the final epoch.
    pub model: SingleDomainModel<F>,
    pub best_store: ParamStore<F>,
    pub best_epoch: usize,
    pub metrics: Vec<EpochMetrics>,
}

impl<F: Real> SingleRun<F> {
    pub fn selected(&self, sel: ModelSelection) -> SingleDomainModel<F> {
        let mut m = self.model.clone();
        m.store = select(sel, &self.model.store, &self.best_store);
        m
    }
}

/// Mean cross-entropy of `logits_for(batch)` over all samples in eval mode.
fn mean_loss<F: Real>(
    n: usize,
    labels: &[usize],
    mut logits_for: impl FnMut(&mut Graph<F>, &[usize]) -> Result<Var>,
) -> Result<f64> {
    let mut total = 0.0;
    let idx: Vec<usize> = (0..n).collect();
    for chunk in idx.chunks(EVAL_CHUNK) {
        let mut g = Graph::new();
        let logits = logits_for(&mut g, chunk)?;
        let y: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
        let loss = g.softmax_cross_entropy(logits, &y)?;
        total += g.value(loss).item().as_f64() * chunk.len() as f64;
    }
    Ok(total / n as f64)
}

/// Adam on cross-entropy with the plateau scheduler driven by validation
/// loss; tracks the lowest-validation-loss parameters.
pub fn train_single<F: Real>(format: ReprFormat, data: &Dataset, cfg: &TrainConfig) -> Result<SingleRun<F>> {
    cfg.validate()?;
    let (train, val) = split_sets(data)?;
    let mut init = rng_for(cfg.seed, &format!("init/single/{}", format.name()));
    let mut model = SingleDomainModel::<F>::new(
        format,
        cfg.encoder_spec(format.channels()),
        cfg.head_bias,
        cfg.leaky_slope,
        &mut init,
    )?;
    let train_bank = FeatureBank::<F>::from_maps(maps_of(&train), format)?;
    let val_bank = FeatureBank::<F>::from_maps(maps_of(&val), format)?;
    let (train_y, val_y) = (labels_of(&train), labels_of(&val));
    let ids = model.trainable();
    let mut progress = Progress::new(cfg)?;
    for epoch in 1..=cfg.epochs {
        let (mut total, mut count) = (0.0, 0usize);
        for b in epoch_batches(train.len(), cfg.batch_size, cfg.seed, "single", epoch) {
            let mut g = Graph::new();
            let x = g.input(train_bank.batch(&b)?)?;
            let logits = model.logits(&mut g, x, Mode::Train)?;
            let y: Vec<usize> = b.iter().map(|&i| train_y[i]).collect();
            let loss = step_loss(&mut g, logits, &y, &mut model.store)?;
            progress.adam.step(&mut model.store, &ids)?;
            total += loss * b.len() as f64;
            count += b.len();
        }
        let val_loss = mean_loss(val.len(), &val_y, |g, idx| {
            let x = g.input(val_bank.batch(idx)?)?;
            model.logits(g, x, Mode::Eval)
        })?;
        progress.finish_epoch(epoch, total / count as f64, val_loss, &model.store);
    }
    let (metrics, best_epoch, best_store) = progress.into_parts();
    Ok(SingleRun { model, best_store, best_epoch, metrics })
}

/// Result of a multi-domain run.
#[derive(Debug, Clone)]
pub struct MultiRun<F: Real> {
    pub model: MultiDomainModel<F>,
    pub best_store: ParamStore<F>,
    pub best_epoch: usize,
    pub metrics: Vec<EpochMetrics>,
    /// Optimization steps in which each domain (in `DOMAINS` order) was active.
    pub domain_steps: [usize; 5],
    pub steps: usize,
}

impl<F: Real> MultiRun<F> {
    pub fn selected(&self, sel: ModelSelection) -> MultiDomainModel<F> {
        let mut m = self.model.clone();
        m.store = select(sel, &self.model.store, &self.best_store);
        m
    }
}

fn domain_banks<F: Real>(samples: &[&LabeledSample]) -> Result<Vec<FeatureBank<F>>> {
    DOMAINS
        .iter()
        .map(|&d| FeatureBank::from_maps(maps_of(samples), ReprFormat::single(d)))
        .collect()
}

/// Every step draws one pair of domains; only those encoders and the shared
/// head receive updates. Validation uses all five encoders.
pub fn train_multi<F: Real>(data: &Dataset, cfg: &TrainConfig) -> Result<MultiRun<F>> {
    cfg.validate()?;
    let (train, val) = split_sets(data)?;
    let mut init = rng_for(cfg.seed, "init/multi");
    let mut model = MultiDomainModel::<F>::new(cfg.encoder_spec(1), cfg.head_bias, cfg.leaky_slope, &mut init)?;
    let train_banks = domain_banks::<F>(&train)?;
    let val_banks = domain_banks::<F>(&val)?;
    let (train_y, val_y) = (labels_of(&train), labels_of(&val));
    let mut domain_rng = rng_for(cfg.seed, "domains");
    let mut domain_steps = [0usize; 5];
    let mut steps = 0;
    let mut progress = Progress::new(cfg)?;
    for epoch in 1..=cfg.epochs {
        let (mut total, mut count) = (0.0, 0usize);
        for b in epoch_batches(train.len(), cfg.batch_size, cfg.seed, "multi", epoch) {
            let pair = sample_domains(&mut domain_rng, 2, DOMAINS.len())?;
            let active: Vec<Domain> = pair.iter().map(|&i| DOMAINS[i]).collect();
            let mut g = Graph::new();
            let mut inputs = Vec::with_capacity(2);
            for &i in &pair {
                inputs.push((DOMAINS[i], g.input(train_banks[i].batch(&b)?)?));
                domain_steps[i] += 1;
            }
            let logits = model.logits(&mut g, &inputs, &active, Mode::Train)?;
            let y: Vec<usize> = b.iter().map(|&i| train_y[i]).collect();
            let loss = step_loss(&mut g, logits, &y, &mut model.store)?;
            let ids = model.trainable(&active);
            progress.adam.step(&mut model.store, &ids)?;
            total += loss * b.len() as f64;
            count += b.len();
            steps += 1;
        }
        let val_loss = mean_loss(val.len(), &val_y, |g, idx| {
            let mut inputs = Vec::with_capacity(5);
            for (i, &d) in DOMAINS.iter().enumerate() {
                inputs.push((d, g.input(val_banks[i].batch(idx)?)?));
            }
            model.logits(g, &inputs, &DOMAINS, Mode::Eval)
        })?;
        progress.finish_epoch(epoch, total / count as f64, val_loss, &model.store);
    }
    let (metrics, best_epoch, best_store) = progress.into_parts();
    Ok(MultiRun { model, best_store, best_epoch, metrics, domain_steps, steps })
}

/// Frozen feature extractor under a meta module.
#[derive(Debug, Clone)]
pub enum MetaBase<F: Real> {
    /// Encoders (and shared head) of one multi-domain model.
    Multi(MultiDomainModel<F>),
    /// Five single-domain models, one per domain in `DOMAINS` order.
    Singles(Vec<SingleDomainModel<F>>),
}

impl<F: Real> MetaBase<F> {
    pub fn singles(models: Vec<SingleDomainModel<F>>) -> Result<Self> {
        if models.len() != DOMAINS.len()
            || models.iter().zip(DOMAINS).any(|(m, d)| m.format != ReprFormat::single(d))
        {
            return invalid("meta base needs the five single-channel models in domain order");
        }
        Ok(Self::Singles(models))
    }

    pub fn embed_dim(&self) -> usize {
        match self {
            MetaBase::Multi(m) => m.encoders[0].spec().embed_dim,
            MetaBase::Singles(v) => v[0].encoder.spec().embed_dim,
        }
    }

    /// Hash of every base parameter value.
    pub fn param_hash(&self) -> String {
        let mut bytes = Vec::new();
        let mut push = |s: &ParamStore<F>| {
            for (_, p) in s.iter() {
                bytes.extend(p.name.as_bytes());
                for v in p.value.data() {
                    bytes.extend(v.as_f64().to_le_bytes());
                }
            }
        };
        match self {
            MetaBase::Multi(m) => push(&m.store),
            MetaBase::Singles(v) => v.iter().for_each(|m| push(&m.store)),
        }
        content_hash(&bytes)
    }

    fn domain_features(&mut self, g: &mut Graph<F>, d: Domain, x: Var, input: MetaInput) -> Result<Var> {
        match self {
            MetaBase::Multi(m) => {
                let enc = m.encoder(d).clone();
                let e = enc.forward(g, &mut m.store, x, Mode::Eval, m.slope, true)?;
                match input {
                    MetaInput::Embeddings => Ok(e),
                    MetaInput::Confidences => m.head.forward(g, &m.store, e, true),
                }
            }
            MetaBase::Singles(v) => {
                let m = &mut v[crate::nn::domain_index(d)];
                let e = m.embed(g, x, Mode::Eval, true)?;
                match input {
                    MetaInput::Embeddings => Ok(e),
                    MetaInput::Confidences => m.head.forward(g, &m.store, e, true),
                }
            }
        }
    }

    /// `N × (5·dim)` features: the per-domain outputs concatenated in
    /// `DOMAINS` order.
    pub fn features(&mut self, maps: &[&DopplerTimeMap], input: MetaInput) -> Result<Tensor<F>> {
        let per = input.dim(self.embed_dim()) / DOMAINS.len();
        let mut out = vec![F::zero(); maps.len() * per * DOMAINS.len()];
        let row = per * DOMAINS.len();
        for (c, chunk) in maps.chunks(EVAL_CHUNK).enumerate() {
            let idx: Vec<usize> = (0..chunk.len()).collect();
            for (di, &d) in DOMAINS.iter().enumerate() {
                let bank = FeatureBank::<F>::from_maps(chunk.iter().copied(), ReprFormat::single(d))?;
                let mut g = Graph::new();
                let x = g.input(bank.batch(&idx)?)?;
                let f = self.domain_features(&mut g, d, x, input)?;
                let vals = g.value(f).data();
                for i in 0..chunk.len() {
                    let n = c * EVAL_CHUNK + i;
                    out[n * row + di * per..n * row + (di + 1) * per].copy_from_slice(&vals[i * per..(i + 1) * per]);
                }
            }
        }
        Tensor::new(&[maps.len(), row], out)
    }
}

/// Result of a meta run; `base` is returned unchanged.
#[derive(Debug, Clone)]
pub struct MetaRun<F: Real> {
    pub base: MetaBase<F>,
    pub meta: MetaModule<F>,
    pub best_store: ParamStore<F>,
    pub best_epoch: usize,
    pub metrics: Vec<EpochMetrics>,
    pub base_hash: String,
}

impl<F: Real> MetaRun<F> {
    pub fn selected(&self, sel: ModelSelection) -> MetaModule<F> {
        let mut m = self.meta.clone();
        m.store = select(sel, &self.meta.store, &self.best_store);
        m
    }
}

fn rows<F: Real>(t: &Tensor<F>, idx: &[usize]) -> Result<Tensor<F>> {
    let w = t.shape()[1];
    let mut out = Vec::with_capacity(idx.len() * w);
    for &i in idx {
        out.extend_from_slice(&t.data()[i * w..(i + 1) * w]);
    }
    Tensor::new(&[idx.len(), w], out)
}

/// Trains the meta module on features of the frozen base computed once on
/// the training subset. Fails if any base parameter changed.
pub fn train_meta<F: Real>(
    mut base: MetaBase<F>,
    input: MetaInput,
    activation: MetaActivation,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<MetaRun<F>> {
    cfg.validate()?;
    let (train, val) = split_sets(data)?;
    let base_hash = base.param_hash();
    let train_x = base.features(&maps_of(&train), input)?;
    let val_x = base.features(&maps_of(&val), input)?;
    let (train_y, val_y) = (labels_of(&train), labels_of(&val));
    let mut init = rng_for(cfg.seed, &format!("init/meta/{}/{}", input.name(), activation.name()));
    let mut meta = MetaModule::<F>::new(input, activation, base.embed_dim(), cfg.leaky_slope, &mut init)?;
    let ids = meta.trainable();
    let mut progress = Progress::new(cfg)?;
    for epoch in 1..=cfg.epochs {
        let (mut total, mut count) = (0.0, 0usize);
        for b in epoch_batches(train.len(), cfg.batch_size, cfg.seed, "meta", epoch) {
            let mut g = Graph::new();
            let x = g.input(rows(&train_x, &b)?)?;
            let logits = meta.forward(&mut g, x)?;
            let y: Vec<usize> = b.iter().map(|&i| train_y[i]).collect();
            let loss = step_loss(&mut g, logits, &y, &mut meta.store)?;
            progress.adam.step(&mut meta.store, &ids)?;
            total += loss * b.len() as f64;
            count += b.len();
        }
        let val_loss = mean_loss(val.len(), &val_y, |g, idx| {
            let x = g.input(rows(&val_x, idx)?)?;
            meta.forward(g, x)
        })?;
        progress.finish_epoch(epoch, total / count as f64, val_loss, &meta.store);
    }
    if base.param_hash() != base_hash {
        return Err(Error::InvalidState("meta training modified the frozen base".into()));
    }
    let (metrics, best_epoch, best_store) = progress.into_parts();
    Ok(MetaRun { base, meta, best_store, best_epoch, metrics, base_hash })
}
