use rand::seq::index::sample;
use rand::Rng;

use super::{domain_index, domain_short_name, Domain, Encoder, EncoderSpec, Head, DOMAINS};
use crate::autograd::{Graph, Mode, ParamId, ParamStore, Real, Var};
use crate::error::{invalid, Result};
use crate::repr::ReprFormat;
use crate::NUM_CLASSES;

/// Draws `k` distinct indices out of `0..n`, uniformly over unordered sets,
/// returned in increasing order.
pub fn sample_domains<R: Rng + ?Sized>(rng: &mut R, k: usize, n: usize) -> Result<Vec<usize>> {
    if k > n {
        return invalid(format!("cannot sample {k} of {n} domains"));
    }
    if k == n {
        return Ok((0..n).collect());
    }
    let mut v = sample(rng, n, k).into_vec();
    v.sort_unstable();
    Ok(v)
}

/// One encoder over a fixed input format plus a linear head.
#[derive(Debug, Clone)]
pub struct SingleDomainModel<F: Real = f32> {
    pub format: ReprFormat,
    pub store: ParamStore<F>,
    pub encoder: Encoder,
    pub head: Head,
    pub slope: f64,
}

impl<F: Real> SingleDomainModel<F> {
    pub fn new<R: Rng + ?Sized>(
        format: ReprFormat,
        spec: EncoderSpec,
        head_bias: bool,
        slope: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if spec.in_ch != format.channels() {
            return invalid(format!(
                "format {} has {} channels, encoder spec expects {}",
                format.name(),
                format.channels(),
                spec.in_ch
            ));
        }
        let mut store = ParamStore::new();
        let encoder = Encoder::init(&mut store, "encoder", spec, slope, rng)?;
        let head = Head::init(&mut store, "head", spec.embed_dim, NUM_CLASSES, head_bias, slope, rng)?;
        Ok(Self { format, store, encoder, head, slope })
    }

    pub fn trainable(&self) -> Vec<ParamId> {
        let mut ids = self.encoder.trainable();
        ids.extend(self.head.trainable());
        ids
    }

    pub fn embed(&mut self, g: &mut Graph<F>, x: Var, mode: Mode, frozen: bool) -> Result<Var> {
        self.encoder.forward(g, &mut self.store, x, mode, self.slope, frozen)
    }

    pub fn logits(&mut self, g: &mut Graph<F>, x: Var, mode: Mode) -> Result<Var> {
        let e = self.embed(g, x, mode, false)?;
        self.head.forward(g, &self.store, e, false)
    }
}

/// Five per-domain encoders whose embeddings are summed and passed through
/// one shared linear head.
#[derive(Debug, Clone)]
pub struct MultiDomainModel<F: Real = f32> {
    pub store: ParamStore<F>,
    pub encoders: Vec<Encoder>,
    pub head: Head,
    pub slope: f64,
}

impl<F: Real> MultiDomainModel<F> {
    /// `spec.in_ch` is ignored; every domain encoder takes one channel.
    pub fn new<R: Rng + ?Sized>(spec: EncoderSpec, head_bias: bool, slope: f64, rng: &mut R) -> Result<Self> {
        let mut store = ParamStore::new();
        let spec = EncoderSpec { in_ch: 1, ..spec };
        let encoders = DOMAINS
            .iter()
            .map(|&d| Encoder::init(&mut store, &format!("encoder.{}", domain_short_name(d)), spec, slope, rng))
            .collect::<Result<Vec<_>>>()?;
        let head = Head::init(&mut store, "head", spec.embed_dim, NUM_CLASSES, head_bias, slope, rng)?;
        Ok(Self { store, encoders, head, slope })
    }

    pub fn encoder(&self, d: Domain) -> &Encoder {
        &self.encoders[domain_index(d)]
    }

    /// Trainable parameters touched when `active` domains are used.
    pub fn trainable(&self, active: &[Domain]) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = active.iter().flat_map(|&d| self.encoder(d).trainable()).collect();
        ids.extend(self.head.trainable());
        ids
    }

    /// Sum of the embeddings of the active domains. `inputs` supplies an
    /// `N × 1 × S × S` batch per domain; inactive domains are never run.
    pub fn embed_sum(
        &mut self,
        g: &mut Graph<F>,
        inputs: &[(Domain, Var)],
        active: &[Domain],
        mode: Mode,
        frozen: bool,
    ) -> Result<Var> {
        if active.is_empty() {
            return invalid("multi-domain forward needs at least one active domain");
        }
        let mut acc: Option<Var> = None;
        for (i, &d) in active.iter().enumerate() {
            if active[..i].contains(&d) {
                return invalid(format!("domain {d:?} listed twice"));
            }
            let Some(&(_, x)) = inputs.iter().find(|(k, _)| *k == d) else {
                return invalid(format!("no input supplied for active domain {d:?}"));
            };
            let enc = &self.encoders[domain_index(d)];
            let e = enc.forward(g, &mut self.store, x, mode, self.slope, frozen)?;
            acc = Some(match acc {
                None => e,
                Some(a) => g.add(a, e)?,
            });
        }
        Ok(acc.expect("active set is non-empty"))
    }

    pub fn logits(&mut self, g: &mut Graph<F>, inputs: &[(Domain, Var)], active: &[Domain], mode: Mode) -> Result<Var> {
        let e = self.embed_sum(g, inputs, active, mode, false)?;
        self.head.forward(g, &self.store, e, false)
    }
}
