use super::conv::{conv2d_backward, conv2d_forward, ConvGeometry};
use super::norm::{batchnorm_backward, batchnorm_forward, BnSaved};
use super::{matmul, ParamId, ParamStore, Real, Tensor};
use crate::error::{invalid, Error, Result};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Batch-norm behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

enum Op<F> {
    Leaf,
    Add(Var, Var),
    Sum(Var),
    Reshape(Var),
    Conv2d {
        x: Var,
        w: Var,
        b: Var,
        geom: ConvGeometry,
    },
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        saved: BnSaved<F>,
    },
    LeakyRelu {
        x: Var,
        slope: F,
    },
    Linear {
        x: Var,
        w: Var,
        b: Option<Var>,
    },
    SoftmaxCe {
        logits: Var,
        labels: Vec<usize>,
        probs: Vec<F>,
    },
    PickSum {
        x: Var,
        cols: Vec<usize>,
    },
}

struct Node<F> {
    value: Tensor<F>,
    grad: Option<Tensor<F>>,
    requires_grad: bool,
    op: Op<F>,
}

/// Append-only computation tape.
pub struct Graph<F: Real> {
    nodes: Vec<Node<F>>,
    bindings: Vec<(Var, ParamId)>,
}

impl<F: Real> Default for Graph<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> Graph<F> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            bindings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>, requires_grad: bool, name: &'static str) -> Result<Var> {
        if !value.is_finite() {
            return Err(Error::NonFinite(name));
        }
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Leaf tensor; `requires_grad` marks it as a gradient target.
    pub fn leaf(&mut self, value: Tensor<F>, requires_grad: bool) -> Result<Var> {
        self.push(value, Op::Leaf, requires_grad, "leaf")
    }

    /// Constant input.
    pub fn input(&mut self, value: Tensor<F>) -> Result<Var> {
        self.leaf(value, false)
    }

    /// Copies a stored parameter onto the tape. Trainable parameters become
    /// gradient targets and are remembered for [`Graph::write_grads`].
    pub fn param(&mut self, store: &ParamStore<F>, id: ParamId) -> Result<Var> {
        let p = store.get(id);
        let v = self.leaf(p.value.clone(), p.trainable)?;
        if p.trainable {
            self.bindings.push((v, id));
        }
        Ok(v)
    }

    /// Copies a stored parameter as a constant (no gradient).
    pub fn frozen(&mut self, store: &ParamStore<F>, id: ParamId) -> Result<Var> {
        self.input(store.value(id).clone())
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> Option<&Tensor<F>> {
        self.nodes[v.0].grad.as_ref()
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return invalid(format!("add: shapes {:?} and {:?} differ", va.shape(), vb.shape()));
        }
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| x + y).collect();
        let out = Tensor::new(va.shape(), data)?;
        let rg = self.needs(a) || self.needs(b);
        self.push(out, Op::Add(a, b), rg, "add")
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s = self.value(a).data().iter().copied().sum();
        let rg = self.needs(a);
        self.push(Tensor::scalar(s), Op::Sum(a), rg, "sum")
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let out = self.value(a).clone().reshape(shape)?;
        let rg = self.needs(a);
        self.push(out, Op::Reshape(a), rg, "reshape")
    }

    /// `N×C×H×W` input, `K×C×kh×kw` weights, `K` bias.
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, stride: usize, padding: usize) -> Result<Var> {
        let geom = ConvGeometry::new(self.value(x).shape(), self.value(w).shape(), self.value(b).shape(), stride, padding)?;
        let out = conv2d_forward(&geom, self.value(x).data(), self.value(w).data(), self.value(b).data());
        let out = Tensor::new(&geom.output_shape(), out)?;
        let rg = self.needs(x) || self.needs(w) || self.needs(b);
        self.push(out, Op::Conv2d { x, w, b, geom }, rg, "conv2d")
    }

    /// Per-channel batch normalization of an `N×C×H×W` tensor. In train mode
    /// batch statistics are used and the running statistics are updated in
    /// place; in eval mode the running statistics are used.
    pub fn batchnorm2d(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        running_mean: &mut [F],
        running_var: &mut [F],
        mode: Mode,
    ) -> Result<Var> {
        let shape = self.value(x).shape().to_vec();
        if shape.len() != 4 {
            return invalid(format!("batchnorm2d expects N×C×H×W, got {shape:?}"));
        }
        let c = shape[1];
        for (name, len) in [
            ("gamma", self.value(gamma).numel()),
            ("beta", self.value(beta).numel()),
            ("running mean", running_mean.len()),
            ("running var", running_var.len()),
        ] {
            if len != c {
                return invalid(format!("batchnorm2d: {name} has {len} entries for {c} channels"));
            }
        }
        if mode == Mode::Train && shape[0] * shape[2] * shape[3] < 2 {
            return invalid("batchnorm2d in train mode needs at least two values per channel");
        }
        let (y, saved) = batchnorm_forward(
            &shape,
            self.value(x).data(),
            self.value(gamma).data(),
            self.value(beta).data(),
            running_mean,
            running_var,
            mode,
        );
        let out = Tensor::new(&shape, y)?;
        let rg = self.needs(x) || self.needs(gamma) || self.needs(beta);
        self.push(out, Op::BatchNorm { x, gamma, beta, saved }, rg, "batchnorm2d")
    }

    pub fn leaky_relu(&mut self, x: Var, slope: F) -> Result<Var> {
        let v = self.value(x);
        let data = v
            .data()
            .iter()
            .map(|&a| if a > F::zero() { a } else { slope * a })
            .collect();
        let out = Tensor::new(v.shape(), data)?;
        let rg = self.needs(x);
        self.push(out, Op::LeakyRelu { x, slope }, rg, "leaky_relu")
    }

    /// `x·w + b` with `x: N×D`, `w: D×M`, `b: M`.
    pub fn linear(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let (xs, ws) = (self.value(x).shape(), self.value(w).shape());
        if xs.len() != 2 || ws.len() != 2 || xs[1] != ws[0] {
            return invalid(format!("linear: cannot multiply {xs:?} by {ws:?}"));
        }
        let (n, d, m) = (xs[0], xs[1], ws[1]);
        let mut out = vec![F::zero(); n * m];
        if let Some(b) = b {
            let bv = self.value(b);
            if bv.numel() != m {
                return invalid(format!("linear: bias has {} entries, expected {m}", bv.numel()));
            }
            for row in out.chunks_exact_mut(m) {
                row.copy_from_slice(bv.data());
            }
        }
        matmul(self.value(x).data(), false, self.value(w).data(), false, &mut out, n, d, m, F::one());
        let out = Tensor::new(&[n, m], out)?;
        let rg = self.needs(x) || self.needs(w) || b.is_some_and(|b| self.needs(b));
        self.push(out, Op::Linear { x, w, b }, rg, "linear")
    }

    /// Mean over the batch of `−log softmax(logits)[label]`.
    pub fn softmax_cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Result<Var> {
        let v = self.value(logits);
        if v.rank() != 2 || v.shape()[0] != labels.len() {
            return invalid(format!(
                "softmax_cross_entropy: logits {:?} vs {} labels",
                v.shape(),
                labels.len()
            ));
        }
        let k = v.shape()[1];
        if let Some(bad) = labels.iter().find(|&&l| l >= k) {
            return invalid(format!("label {bad} out of range for {k} classes"));
        }
        let mut probs = Vec::with_capacity(v.numel());
        let mut loss = 0.0f64;
        for (row, &label) in v.data().chunks_exact(k).zip(labels) {
            let max = row.iter().copied().fold(F::neg_infinity(), F::max);
            let exps: Vec<F> = row.iter().map(|&z| (z - max).exp()).collect();
            let total: F = exps.iter().copied().sum();
            loss += (total.ln() - (row[label] - max)).as_f64();
            probs.extend(exps.iter().map(|&e| e / total));
        }
        let n = labels.len() as f64;
        let rg = self.needs(logits);
        self.push(
            Tensor::scalar(F::from_f64_lossy(loss / n)),
            Op::SoftmaxCe {
                logits,
                labels: labels.to_vec(),
                probs,
            },
            rg,
            "softmax_cross_entropy",
        )
    }

    /// `Σ_n x[n, cols[n]]` for an `N×K` tensor.
    pub fn pick_sum(&mut self, x: Var, cols: &[usize]) -> Result<Var> {
        let v = self.value(x);
        if v.rank() != 2 || v.shape()[0] != cols.len() {
            return invalid(format!("pick_sum: {:?} vs {} indices", v.shape(), cols.len()));
        }
        let k = v.shape()[1];
        if let Some(bad) = cols.iter().find(|&&c| c >= k) {
            return invalid(format!("pick_sum: column {bad} out of range for {k}"));
        }
        let s = v.data().chunks_exact(k).zip(cols).map(|(r, &c)| r[c]).sum();
        let rg = self.needs(x);
        self.push(Tensor::scalar(s), Op::PickSum { x, cols: cols.to_vec() }, rg, "pick_sum")
    }

    /// Reverse pass from a scalar. Gradients of every reachable leaf that
    /// requires them are stored on the tape, replacing earlier ones.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).numel() != 1 {
            return invalid(format!(
                "backward needs a scalar, got shape {:?}",
                self.value(loss).shape()
            ));
        }
        let mut grads: Vec<Option<Vec<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![F::one()]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            self.propagate(&node.op, &node.value, &g, &mut grads)?;
            // interior gradients are dropped to bound peak memory
            if matches!(node.op, Op::Leaf) {
                grads[i] = Some(g);
            }
        }
        for (node, g) in self.nodes.iter_mut().zip(grads) {
            node.grad = match g {
                Some(g) if node.requires_grad => Some(Tensor::new(node.value.shape(), g)?),
                _ => None,
            };
        }
        Ok(())
    }

    fn propagate(&self, op: &Op<F>, out: &Tensor<F>, g: &[F], grads: &mut [Option<Vec<F>>]) -> Result<()> {
        let mut send = |v: Var, contrib: Vec<F>| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(acc) => acc.iter_mut().zip(&contrib).for_each(|(a, &c)| *a = *a + c),
                slot @ None => *slot = Some(contrib),
            }
        };
        match op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                send(*a, g.to_vec());
                send(*b, g.to_vec());
            }
            Op::Sum(a) => send(*a, vec![g[0]; self.value(*a).numel()]),
            Op::Reshape(a) => send(*a, g.to_vec()),
            Op::Conv2d { x, w, b, geom } => {
                let grads = conv2d_backward(
                    geom,
                    self.value(*x).data(),
                    self.value(*w).data(),
                    g,
                    self.needs(*x),
                );
                if let Some(dx) = grads.dx {
                    send(*x, dx);
                }
                send(*w, grads.dw);
                send(*b, grads.db);
            }
            Op::BatchNorm { x, gamma, beta, saved } => {
                let (dx, dgamma, dbeta) =
                    batchnorm_backward(out.shape(), self.value(*gamma).data(), saved, g);
                send(*x, dx);
                send(*gamma, dgamma);
                send(*beta, dbeta);
            }
            Op::LeakyRelu { x, slope } => {
                let dx = self
                    .value(*x)
                    .data()
                    .iter()
                    .zip(g)
                    .map(|(&a, &gi)| if a > F::zero() { gi } else { *slope * gi })
                    .collect();
                send(*x, dx);
            }
            Op::Linear { x, w, b } => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let (n, d, m) = (xv.shape()[0], xv.shape()[1], wv.shape()[1]);
                if self.needs(*x) {
                    let mut dx = vec![F::zero(); n * d];
                    matmul(g, false, wv.data(), true, &mut dx, n, m, d, F::zero());
                    send(*x, dx);
                }
                if self.needs(*w) {
                    let mut dw = vec![F::zero(); d * m];
                    matmul(xv.data(), true, g, false, &mut dw, d, n, m, F::zero());
                    send(*w, dw);
                }
                if let Some(b) = b {
                    let mut db = vec![F::zero(); m];
                    for row in g.chunks_exact(m) {
                        db.iter_mut().zip(row).for_each(|(a, &r)| *a = *a + r);
                    }
                    send(*b, db);
                }
            }
            Op::SoftmaxCe { logits, labels, probs } => {
                let k = self.value(*logits).shape()[1];
                let scale = g[0] / F::from_usize(labels.len()).unwrap();
                let mut d = probs.clone();
                for (row, &l) in d.chunks_exact_mut(k).zip(labels) {
                    row[l] = row[l] - F::one();
                    row.iter_mut().for_each(|v| *v = *v * scale);
                }
                send(*logits, d);
            }
            Op::PickSum { x, cols } => {
                let k = self.value(*x).shape()[1];
                let mut d = vec![F::zero(); cols.len() * k];
                for (n, &c) in cols.iter().enumerate() {
                    d[n * k + c] = g[0];
                }
                send(*x, d);
            }
        }
        Ok(())
    }

    /// Moves gradients of bound parameters into the store. Parameters bound
    /// more than once get the sum; bound parameters the loss did not reach
    /// get zeros.
    pub fn write_grads(&self, store: &mut ParamStore<F>) {
        let mut touched = Vec::new();
        for &(v, id) in &self.bindings {
            let node = &self.nodes[v.0];
            let g = node
                .grad
                .clone()
                .unwrap_or_else(|| Tensor::zeros(node.value.shape()));
            let p = store.get_mut(id);
            if touched.contains(&id) {
                if let Some(acc) = p.grad.as_mut() {
                    acc.data_mut()
                        .iter_mut()
                        .zip(g.data())
                        .for_each(|(a, &b)| *a = *a + b);
                }
            } else {
                p.grad = Some(g);
                touched.push(id);
            }
        }
    }

    /// Parameters bound to this graph.
    pub fn bound_params(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = self.bindings.iter().map(|&(_, id)| id).collect();
        ids.sort();
        ids.dedup();
        ids
    }
}
