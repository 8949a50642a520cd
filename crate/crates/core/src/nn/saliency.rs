use std::io::Write;
use std::path::Path;

use super::{Domain, MultiDomainModel, SingleDomainModel};
use crate::autograd::{Graph, Mode, Real, Tensor};
use crate::error::{invalid, Result};
use crate::matrix::Matrix;
use crate::NUM_CLASSES;

/// Fraction of the map maximum below which the display variant is zeroed.
pub const SALIENCY_THRESHOLD: f64 = 0.25;

fn check_classes(classes: &[usize], n: usize) -> Result<()> {
    if classes.len() != n {
        return invalid(format!("{} class indices for a batch of {n}", classes.len()));
    }
    if let Some(&c) = classes.iter().find(|&&c| c >= NUM_CLASSES) {
        return invalid(format!("class index {c} out of range"));
    }
    Ok(())
}

/// `|∂ logit[classes[i]] / ∂ x[i]|` for every sample of an `N×C×H×W` batch.
/// Evaluation mode keeps samples independent, so one backward pass over the
/// summed selected logits yields every per-sample gradient.
pub fn input_saliency<F: Real>(
    model: &mut SingleDomainModel<F>,
    x: &Tensor<F>,
    classes: &[usize],
) -> Result<Tensor<f64>> {
    check_classes(classes, x.shape().first().copied().unwrap_or(0))?;
    let mut g = Graph::new();
    let xv = g.leaf(x.clone(), true)?;
    let logits = model.logits(&mut g, xv, Mode::Eval)?;
    let picked = g.pick_sum(logits, classes)?;
    g.backward(picked)?;
    let grad = g.grad(xv).expect("input requires grad");
    Tensor::new(grad.shape(), grad.data().iter().map(|v| v.as_f64().abs()).collect())
}

/// Per-domain input saliency of the multi-domain model for the given
/// active set. Each returned tensor is `N×1×H×W`.
pub fn multi_input_saliency<F: Real>(
    model: &mut MultiDomainModel<F>,
    inputs: &[(Domain, Tensor<F>)],
    active: &[Domain],
    classes: &[usize],
) -> Result<Vec<(Domain, Tensor<f64>)>> {
    let n = inputs.first().map(|(_, t)| t.shape()[0]).unwrap_or(0);
    check_classes(classes, n)?;
    let mut g = Graph::new();
    let mut vars = Vec::new();
    for (d, t) in inputs {
        if active.contains(d) {
            vars.push((*d, g.leaf(t.clone(), true)?));
        }
    }
    let logits = model.logits(&mut g, &vars, active, Mode::Eval)?;
    let picked = g.pick_sum(logits, classes)?;
    g.backward(picked)?;
    vars.iter()
        .map(|&(d, v)| {
            let grad = g.grad(v).expect("input requires grad");
            Ok((d, Tensor::new(grad.shape(), grad.data().iter().map(|v| v.as_f64().abs()).collect())?))
        })
        .collect()
}

/// Zeroes every entry below `frac · max`.
pub fn threshold_map(map: &Matrix<f64>, frac: f64) -> Matrix<f64> {
    let max = map.as_slice().iter().copied().fold(0.0f64, f64::max);
    let cut = frac * max;
    map.map(|&v| if v < cut { 0.0 } else { v })
}

/// Writes an 8-bit binary PGM scaled so the map maximum is 255.
pub fn write_pgm(map: &Matrix<f64>, path: &Path) -> Result<()> {
    let max = map.as_slice().iter().copied().fold(0.0f64, f64::max);
    if !max.is_finite() {
        return Err(crate::Error::NonFinite("saliency map"));
    }
    let mut out = Vec::with_capacity(map.as_slice().len() + 32);
    write!(out, "P5\n{} {}\n255\n", map.cols(), map.rows())?;
    out.extend(map.as_slice().iter().map(|&v| {
        if max > 0.0 {
            (v.max(0.0) / max * 255.0).round() as u8
        } else {
            0
        }
    }));
    std::fs::write(path, out)?;
    Ok(())
}
