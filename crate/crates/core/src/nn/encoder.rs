use rand::Rng;

use super::kaiming_uniform;
use crate::autograd::{conv_output_size, Graph, Mode, ParamId, ParamStore, Real, Tensor, Var};
use crate::error::{invalid, Result};

/// Shape of the convolutional encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderSpec {
    pub in_ch: usize,
    pub widths: [usize; 5],
    pub input_size: usize,
    pub embed_dim: usize,
}

impl EncoderSpec {
    /// 128×128 input, 32→64→128→256→512 channels, 128-dim embedding.
    pub fn reference(in_ch: usize) -> Self {
        Self {
            in_ch,
            widths: [32, 64, 128, 256, 512],
            input_size: 128,
            embed_dim: 128,
        }
    }

    /// Spatial side length after each block.
    pub fn spatial_sizes(&self) -> [usize; 5] {
        let mut s = self.input_size;
        let mut out = [0; 5];
        for o in &mut out {
            s = conv_output_size(s, 3, 2, 1);
            *o = s;
        }
        out
    }

    /// Number of features entering the embedding layer.
    pub fn flatten_size(&self) -> usize {
        let s = self.spatial_sizes()[4];
        s * s * self.widths[4]
    }
}

#[derive(Debug, Clone)]
struct ConvBlock {
    w: ParamId,
    b: ParamId,
    gamma: ParamId,
    beta: ParamId,
    running_mean: ParamId,
    running_var: ParamId,
}

/// Five blocks of (3×3 stride-2 conv → batch norm → LeakyReLU), flattened
/// and linearly mapped to the embedding.
#[derive(Debug, Clone)]
pub struct Encoder {
    spec: EncoderSpec,
    prefix: String,
    blocks: Vec<ConvBlock>,
    embed_w: ParamId,
    embed_b: ParamId,
}

impl Encoder {
    pub fn init<F: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<F>,
        prefix: &str,
        spec: EncoderSpec,
        slope: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if spec.in_ch == 0 || spec.widths.contains(&0) || spec.embed_dim == 0 || spec.input_size < 2 {
            return invalid(format!("degenerate encoder spec {spec:?}"));
        }
        let mut blocks = Vec::with_capacity(5);
        let mut c_in = spec.in_ch;
        for (i, &c_out) in spec.widths.iter().enumerate() {
            let p = format!("{prefix}.block{i}");
            blocks.push(ConvBlock {
                w: store.add(
                    format!("{p}.conv.weight"),
                    kaiming_uniform(&[c_out, c_in, 3, 3], c_in * 9, slope, rng),
                    true,
                )?,
                b: store.add(format!("{p}.conv.bias"), Tensor::zeros(&[c_out]), true)?,
                gamma: store.add(format!("{p}.bn.weight"), Tensor::full(&[c_out], F::one()), true)?,
                beta: store.add(format!("{p}.bn.bias"), Tensor::zeros(&[c_out]), true)?,
                running_mean: store.add(format!("{p}.bn.running_mean"), Tensor::zeros(&[c_out]), false)?,
                running_var: store.add(
                    format!("{p}.bn.running_var"),
                    Tensor::full(&[c_out], F::one()),
                    false,
                )?,
            });
            c_in = c_out;
        }
        let flat = spec.flatten_size();
        let embed_w = store.add(
            format!("{prefix}.embed.weight"),
            kaiming_uniform(&[flat, spec.embed_dim], flat, slope, rng),
            true,
        )?;
        let embed_b = store.add(format!("{prefix}.embed.bias"), Tensor::zeros(&[spec.embed_dim]), true)?;
        Ok(Self {
            spec,
            prefix: prefix.to_string(),
            blocks,
            embed_w,
            embed_b,
        })
    }

    pub fn spec(&self) -> &EncoderSpec {
        &self.spec
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    /// Trainable parameters of this encoder.
    pub fn trainable(&self) -> Vec<ParamId> {
        let mut ids = Vec::new();
        for b in &self.blocks {
            ids.extend([b.w, b.b, b.gamma, b.beta]);
        }
        ids.extend([self.embed_w, self.embed_b]);
        ids
    }

    /// Embeds an `N × in_ch × S × S` batch into `N × embed_dim`. With
    /// `frozen` the parameters enter the graph as constants.
    pub fn forward<F: Real>(
        &self,
        g: &mut Graph<F>,
        store: &mut ParamStore<F>,
        x: Var,
        mode: Mode,
        slope: f64,
        frozen: bool,
    ) -> Result<Var> {
        let shape = g.value(x).shape().to_vec();
        let s = self.spec.input_size;
        if shape.len() != 4 || shape[1] != self.spec.in_ch || shape[2] != s || shape[3] != s {
            return invalid(format!(
                "encoder '{}' expects N×{}×{s}×{s} input, got {shape:?}",
                self.prefix, self.spec.in_ch
            ));
        }
        let n = shape[0];
        let bind = |g: &mut Graph<F>, store: &ParamStore<F>, id| {
            if frozen {
                g.frozen(store, id)
            } else {
                g.param(store, id)
            }
        };
        let slope = F::from_f64_lossy(slope);
        let mut h = x;
        for blk in &self.blocks {
            let w = bind(g, store, blk.w)?;
            let b = bind(g, store, blk.b)?;
            h = g.conv2d(h, w, b, 2, 1)?;
            let gamma = bind(g, store, blk.gamma)?;
            let beta = bind(g, store, blk.beta)?;
            let mut rm = store.value(blk.running_mean).data().to_vec();
            let mut rv = store.value(blk.running_var).data().to_vec();
            h = g.batchnorm2d(h, gamma, beta, &mut rm, &mut rv, mode)?;
            if mode == Mode::Train {
                store.get_mut(blk.running_mean).value.data_mut().copy_from_slice(&rm);
                store.get_mut(blk.running_var).value.data_mut().copy_from_slice(&rv);
            }
            h = g.leaky_relu(h, slope)?;
        }
        let flat = g.reshape(h, &[n, self.spec.flatten_size()])?;
        let w = bind(g, store, self.embed_w)?;
        let b = bind(g, store, self.embed_b)?;
        g.linear(flat, w, Some(b))
    }
}

/// Linear classifier head producing logits.
#[derive(Debug, Clone)]
pub struct Head {
    w: ParamId,
    b: Option<ParamId>,
    in_dim: usize,
    classes: usize,
}

impl Head {
    pub fn init<F: Real, R: Rng + ?Sized>(
        store: &mut ParamStore<F>,
        prefix: &str,
        in_dim: usize,
        classes: usize,
        bias: bool,
        slope: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let w = store.add(
            format!("{prefix}.weight"),
            kaiming_uniform(&[in_dim, classes], in_dim, slope, rng),
            true,
        )?;
        let b = if bias {
            Some(store.add(format!("{prefix}.bias"), Tensor::zeros(&[classes]), true)?)
        } else {
            None
        };
        Ok(Self { w, b, in_dim, classes })
    }

    pub fn trainable(&self) -> Vec<ParamId> {
        std::iter::once(self.w).chain(self.b).collect()
    }

    pub fn has_bias(&self) -> bool {
        self.b.is_some()
    }

    pub fn bias_id(&self) -> Option<ParamId> {
        self.b
    }

    pub fn weight_id(&self) -> ParamId {
        self.w
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn forward<F: Real>(&self, g: &mut Graph<F>, store: &ParamStore<F>, e: Var, frozen: bool) -> Result<Var> {
        let shape = g.value(e).shape();
        if shape.len() != 2 || shape[1] != self.in_dim {
            return invalid(format!("head expects N×{} embeddings, got {shape:?}", self.in_dim));
        }
        let (w, b) = if frozen {
            (g.frozen(store, self.w)?, self.b.map(|b| g.frozen(store, b)).transpose()?)
        } else {
            (g.param(store, self.w)?, self.b.map(|b| g.param(store, b)).transpose()?)
        };
        g.linear(e, w, b)
    }

    /// Logits for plain embeddings, outside any graph.
    pub fn apply<F: Real>(&self, store: &ParamStore<F>, e: &Tensor<F>) -> Result<Tensor<F>> {
        let mut g = Graph::new();
        let v = g.input(e.clone())?;
        let out = self.forward(&mut g, store, v, true)?;
        Ok(g.value(out).clone())
    }
}
