use rand::Rng;

use super::kaiming_uniform;
use crate::autograd::{Graph, ParamId, ParamStore, Real, Tensor, Var};
use crate::error::{invalid, Result};
use crate::NUM_CLASSES;

pub const META_HIDDEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaInput {
    /// Five concatenated embeddings.
    Embeddings,
    /// Five concatenated logit vectors.
    Confidences,
}

impl MetaInput {
    pub fn dim(self, embed_dim: usize) -> usize {
        match self {
            MetaInput::Embeddings => 5 * embed_dim,
            MetaInput::Confidences => 5 * NUM_CLASSES,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetaInput::Embeddings => "embeddings",
            MetaInput::Confidences => "confidences",
        }
    }
}

impl std::str::FromStr for MetaInput {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "embeddings" => Ok(Self::Embeddings),
            "confidences" => Ok(Self::Confidences),
            _ => invalid(format!("unknown meta input '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaActivation {
    Linear,
    LeakyRelu,
}

impl MetaActivation {
    pub fn name(self) -> &'static str {
        match self {
            MetaActivation::Linear => "linear",
            MetaActivation::LeakyRelu => "leaky_relu",
        }
    }
}

impl std::str::FromStr for MetaActivation {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "leaky_relu" | "leaky-relu" | "leaky" => Ok(Self::LeakyRelu),
            _ => invalid(format!("unknown meta activation '{s}'")),
        }
    }
}

/// Two hidden layers of width 64 and a six-way output over features of
/// frozen base models.
#[derive(Debug, Clone)]
pub struct MetaModule<F: Real = f32> {
    pub store: ParamStore<F>,
    pub input: MetaInput,
    pub activation: MetaActivation,
    pub slope: f64,
    in_dim: usize,
    layers: Vec<(ParamId, ParamId)>,
}

impl<F: Real> MetaModule<F> {
    pub fn new<R: Rng + ?Sized>(
        input: MetaInput,
        activation: MetaActivation,
        embed_dim: usize,
        slope: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let in_dim = input.dim(embed_dim);
        let dims = [in_dim, META_HIDDEN, META_HIDDEN, NUM_CLASSES];
        let mut store = ParamStore::new();
        let mut layers = Vec::new();
        for (i, w) in dims.windows(2).enumerate() {
            let wid = store.add(
                format!("meta.fc{i}.weight"),
                kaiming_uniform(&[w[0], w[1]], w[0], slope, rng),
                true,
            )?;
            let bid = store.add(format!("meta.fc{i}.bias"), Tensor::zeros(&[w[1]]), true)?;
            layers.push((wid, bid));
        }
        Ok(Self { store, input, activation, slope, in_dim, layers })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn trainable(&self) -> Vec<ParamId> {
        self.layers.iter().flat_map(|&(w, b)| [w, b]).collect()
    }

    pub fn forward(&self, g: &mut Graph<F>, x: Var) -> Result<Var> {
        let shape = g.value(x).shape();
        if shape.len() != 2 || shape[1] != self.in_dim {
            return invalid(format!("meta module expects N×{} input, got {shape:?}", self.in_dim));
        }
        let mut h = x;
        let last = self.layers.len() - 1;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            let w = g.param(&self.store, w)?;
            let b = g.param(&self.store, b)?;
            h = g.linear(h, w, Some(b))?;
            if i < last && self.activation == MetaActivation::LeakyRelu {
                h = g.leaky_relu(h, F::from_f64_lossy(self.slope))?;
            }
        }
        Ok(h)
    }

    /// Logits for a feature batch, outside any training graph.
    pub fn apply(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        let mut g = Graph::new();
        let v = g.input(x.clone())?;
        let out = self.forward(&mut g, v)?;
        Ok(g.value(out).clone())
    }

    /// Weight matrices and biases in layer order.
    pub fn layers(&self) -> Vec<(&Tensor<F>, &Tensor<F>)> {
        self.layers
            .iter()
            .map(|&(w, b)| (self.store.value(w), self.store.value(b)))
            .collect()
    }
}
