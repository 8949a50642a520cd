use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::LabeledSample;
use crate::dsp::{CMatrix, DopplerTimeMap, MAP_SIZE};
use crate::error::{invalid, Result};
use crate::seed::rng_for;
use crate::{CLASS_NAMES, NUM_CLASSES};

/// Map-level dataset whose classes differ only in the temporal phase ramp.
///
/// Class `c` advances the phase of every Doppler row by
/// `±(2π − a)` per frame, `a = offsets[c / 2]`, sign by parity. Those steps
/// exceed π, so the wrapped phase shows them folded to `∓a`; unwrapping
/// along time turns the fold into a smooth ramp across the whole map. The
/// magnitude is drawn from a class-independent distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOnlyConfig {
    pub samples_per_class: usize,
    pub seed: u64,
    pub offsets: [f64; 3],
    /// Per-sample standard deviation of the ramp slope, rad/frame.
    pub slope_jitter: f64,
    /// Per-pixel phase noise standard deviation, rad.
    pub phase_noise: f64,
    /// Magnitude noise floor relative to unit ridge amplitude.
    pub magnitude_floor: f64,
    pub duration_s: f64,
    pub doppler_span_hz: f64,
}

impl Default for PhaseOnlyConfig {
    fn default() -> Self {
        Self {
            samples_per_class: 200,
            seed: 0,
            offsets: [0.15, 0.4, 0.65],
            slope_jitter: 0.02,
            phase_noise: 0.5,
            magnitude_floor: 0.05,
            duration_s: 890.0 / 640.0,
            doppler_span_hz: 640.0,
        }
    }
}

impl PhaseOnlyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_class == 0 {
            return invalid("samples per class must be positive");
        }
        if self.offsets.iter().any(|&a| !(a > 0.0 && a < PI)) {
            return invalid(format!("ramp offsets must lie in (0, π), got {:?}", self.offsets));
        }
        for (name, v) in [
            ("slope jitter", self.slope_jitter),
            ("phase noise", self.phase_noise),
            ("magnitude floor", self.magnitude_floor),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return invalid(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.duration_s > 0.0 && self.doppler_span_hz > 0.0) {
            return invalid("duration and Doppler span must be positive");
        }
        Ok(())
    }

    /// Per-frame phase step of class `label`.
    pub fn class_slope(&self, label: usize) -> f64 {
        let a = self.offsets[label / 2];
        let sign = if label.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * (2.0 * PI - a)
    }
}

/// Random ridges with amplitude modulation over a Rayleigh floor.
fn random_magnitude<R: Rng + ?Sized>(rng: &mut R, floor: f64) -> Vec<f64> {
    let n = MAP_SIZE;
    let mut mag = vec![0.0; n * n];
    let ridges = rng.random_range(1..=3);
    for _ in 0..ridges {
        let amp = rng.random_range(0.4..1.0);
        let width = rng.random_range(1.5..5.0);
        let offset = rng.random_range(-30.0..30.0);
        let swing = rng.random_range(0.0..40.0);
        let cycles = rng.random_range(0.3..3.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        let am_cycles = rng.random_range(0.5..4.0);
        let am_phase = rng.random_range(0.0..2.0 * PI);
        for m in 0..n {
            let u = m as f64 / n as f64;
            let center = (n / 2) as f64 + offset + swing * (2.0 * PI * cycles * u + phase).sin();
            let am = 1.0 + 0.3 * (2.0 * PI * am_cycles * u + am_phase).sin();
            for k in 0..n {
                let d = (k as f64 - center) / width;
                mag[k * n + m] += amp * am * (-0.5 * d * d).exp();
            }
        }
    }
    for v in &mut mag {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += floor * (re * re + im * im).sqrt() / 2f64.sqrt();
    }
    mag
}

pub fn phase_only_sample(cfg: &PhaseOnlyConfig, label: usize, index: usize) -> Result<LabeledSample> {
    cfg.validate()?;
    if label >= NUM_CLASSES {
        return invalid(format!("label {label} out of range"));
    }
    let key = format!("{label}/{index}");
    let mut mag_rng = rng_for(cfg.seed, &format!("phase-only/magnitude/{key}"));
    let mut ph_rng = rng_for(cfg.seed, &format!("phase-only/phase/{key}"));
    let mag = random_magnitude(&mut mag_rng, cfg.magnitude_floor);
    let n = MAP_SIZE;
    let jitter: f64 = ph_rng.sample(StandardNormal);
    let slope = cfg.class_slope(label) + cfg.slope_jitter * jitter;
    let row_offsets: Vec<f64> = (0..n).map(|_| ph_rng.random_range(-PI..PI)).collect();
    let mut values = Vec::with_capacity(n * n);
    for (k, &phi0) in row_offsets.iter().enumerate() {
        for m in 0..n {
            let noise: f64 = ph_rng.sample(StandardNormal);
            let phi = phi0 + slope * m as f64 + cfg.phase_noise * noise;
            values.push(Complex64::from_polar(mag[k * n + m], phi));
        }
    }
    let dtm = DopplerTimeMap::new(CMatrix::from_vec(n, n, values), cfg.duration_s, cfg.doppler_span_hz)?;
    LabeledSample::new(format!("{}_{index:04}", CLASS_NAMES[label]), label, dtm)
}

/// All samples ordered by class then index.
pub fn phase_only_generate(cfg: &PhaseOnlyConfig) -> Result<Vec<LabeledSample>> {
    cfg.validate()?;
    (0..NUM_CLASSES)
        .flat_map(|c| (0..cfg.samples_per_class).map(move |i| (c, i)))
        .map(|(c, i)| phase_only_sample(cfg, c, i))
        .collect()
}
