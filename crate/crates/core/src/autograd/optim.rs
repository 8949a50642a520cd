use std::collections::BTreeMap;

use super::{ParamId, ParamStore, Real};
use crate::error::{invalid, Error, Result};

struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
    steps: u64,
}

/// Adam with bias correction. Moments are tracked per parameter, so a
/// parameter that sits out a step keeps its state untouched.
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step_count: u64,
    moments: BTreeMap<ParamId, Moments>,
}

impl Adam {
    pub fn new(lr: f64) -> Result<Self> {
        Self::with_betas(lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return invalid(format!("learning rate must be positive, got {lr}"));
        }
        if !(0.0..1.0).contains(&beta1) || beta1 == 0.0 || !(0.0..1.0).contains(&beta2) || beta2 == 0.0 {
            return invalid(format!("betas must lie in (0, 1), got {beta1}, {beta2}"));
        }
        if eps <= 0.0 {
            return invalid(format!("eps must be positive, got {eps}"));
        }
        Ok(Self {
            lr,
            beta1,
            beta2,
            eps,
            step_count: 0,
            moments: BTreeMap::new(),
        })
    }

    /// Updates every listed parameter from its stored gradient.
    pub fn step<F: Real>(&mut self, store: &mut ParamStore<F>, ids: &[ParamId]) -> Result<()> {
        if let Some(&id) = ids.iter().find(|&&id| store.get(id).grad.is_none()) {
            return Err(Error::InvalidState(format!(
                "parameter '{}' has no gradient",
                store.get(id).name
            )));
        }
        for &id in ids {
            let p = store.get_mut(id);
            let grad = p.grad.as_ref().unwrap();
            let n = p.value.numel();
            let st = self.moments.entry(id).or_insert_with(|| Moments {
                m: vec![0.0; n],
                v: vec![0.0; n],
                steps: 0,
            });
            st.steps += 1;
            let bc1 = 1.0 - self.beta1.powi(st.steps as i32);
            let bc2 = 1.0 - self.beta2.powi(st.steps as i32);
            for (((w, &g), m), v) in p
                .value
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(&mut st.m)
                .zip(&mut st.v)
            {
                let g = g.as_f64();
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let update = self.lr * (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
                *w = F::from_f64_lossy(w.as_f64() - update);
            }
        }
        self.step_count += 1;
        Ok(())
    }
}

/// Multiplies the learning rate by `factor` once the monitored metric
/// (lower is better) has failed to improve for more than `patience` epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
    pub best_metric: f64,
    pub epochs_since_improvement: usize,
    lr: f64,
}

impl PlateauScheduler {
    const THRESHOLD: f64 = 1e-8;

    pub fn new(lr: f64, factor: f64, patience: usize) -> Result<Self> {
        if !(factor > 0.0 && factor < 1.0) {
            return invalid(format!("plateau factor must lie in (0, 1), got {factor}"));
        }
        if !(lr > 0.0) {
            return invalid(format!("learning rate must be positive, got {lr}"));
        }
        Ok(Self {
            factor,
            patience,
            min_lr: 0.0,
            best_metric: f64::INFINITY,
            epochs_since_improvement: 0,
            lr,
        })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn step(&mut self, metric: f64) -> f64 {
        if metric < self.best_metric - Self::THRESHOLD {
            self.best_metric = metric;
            self.epochs_since_improvement = 0;
        } else {
            self.epochs_since_improvement += 1;
        }
        if self.epochs_since_improvement > self.patience {
            self.lr = (self.lr * self.factor).max(self.min_lr);
            self.epochs_since_improvement = 0;
        }
        self.lr
    }
}
