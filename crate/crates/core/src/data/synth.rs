use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{preprocess, LabeledSample, RawRecording};
use crate::dsp::CMatrix;
use crate::error::{invalid, Result};
use crate::seed::rng_for;
use crate::{CLASS_NAMES, NUM_CLASSES};

/// Time profile scaling the body velocity over a recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    /// Steady motion for the whole clip.
    Constant,
    /// One smooth bump of motion.
    Pulse,
    /// Motion one way, then back.
    Reversal,
    /// A short, fast bump.
    Burst,
}

impl Envelope {
    /// Envelope value at normalized time `u ∈ [0, 1]`, centred at `c`.
    pub fn eval(self, u: f64, c: f64) -> f64 {
        let bump = |center: f64, half: f64| {
            let d = (u - center) / half;
            if d.abs() < 1.0 {
                0.5 * (1.0 + (PI * d).cos())
            } else {
                0.0
            }
        };
        match self {
            Envelope::Constant => 1.0,
            Envelope::Pulse => bump(c, 0.3),
            Envelope::Reversal => bump(c - 0.18, 0.17) - bump(c + 0.18, 0.17),
            Envelope::Burst => bump(c, 0.1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Envelope::Constant => "constant",
            Envelope::Pulse => "pulse",
            Envelope::Reversal => "reversal",
            Envelope::Burst => "burst",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "constant" => Some(Envelope::Constant),
            "pulse" => Some(Envelope::Pulse),
            "reversal" => Some(Envelope::Reversal),
            "burst" => Some(Envelope::Burst),
            _ => None,
        }
    }
}

/// Per-class motion parameters of the pendulum-limb model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassParams {
    /// Body Doppler shift at full envelope, Hz (sign gives direction).
    pub torso_hz: f64,
    /// Limb swing rate, Hz.
    pub limb_rate_hz: f64,
    /// Peak limb Doppler excursion, Hz.
    pub limb_extent_hz: f64,
    pub envelope: Envelope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub classes: Vec<ClassParams>,
    pub samples_per_class: usize,
    /// Standard deviation of the complex noise floor (per sample magnitude).
    pub noise_floor: f64,
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub n_chirps: usize,
    pub samples_per_chirp: usize,
    pub center_freq_hz: f64,
    /// Relative per-sample spread of every class parameter.
    pub jitter: f64,
}

impl Default for SynthConfig {
    /// 640 Hz chirp rate, 890 chirps: exactly 128 STFT frames.
    fn default() -> Self {
        let p = |torso_hz, limb_rate_hz, limb_extent_hz, envelope| ClassParams {
            torso_hz,
            limb_rate_hz,
            limb_extent_hz,
            envelope,
        };
        Self {
            classes: vec![
                p(45.0, 1.8, 110.0, Envelope::Constant),
                p(-35.0, 0.8, 40.0, Envelope::Pulse),
                p(35.0, 0.8, 40.0, Envelope::Pulse),
                p(-30.0, 1.2, 60.0, Envelope::Reversal),
                p(3.0, 0.6, 25.0, Envelope::Constant),
                p(-90.0, 2.5, 60.0, Envelope::Burst),
            ],
            samples_per_class: 10,
            noise_floor: 0.05,
            seed: 0,
            sample_rate_hz: 640.0,
            n_chirps: 890,
            samples_per_chirp: 4,
            center_freq_hz: 5.8e9,
            jitter: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes.len() != NUM_CLASSES {
            return invalid(format!("need {NUM_CLASSES} classes, got {}", self.classes.len()));
        }
        for (name, v) in [
            ("sample rate", self.sample_rate_hz),
            ("center frequency", self.center_freq_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if self.samples_per_class == 0 || self.n_chirps == 0 || self.samples_per_chirp == 0 {
            return invalid("sample, chirp and fast-time counts must be positive");
        }
        if !(self.noise_floor.is_finite() && self.noise_floor >= 0.0) {
            return invalid(format!("noise floor must be non-negative, got {}", self.noise_floor));
        }
        if !(self.jitter.is_finite() && (0.0..1.0).contains(&self.jitter)) {
            return invalid(format!("jitter must lie in [0, 1), got {}", self.jitter));
        }
        for (c, p) in self.classes.iter().enumerate() {
            if !(p.limb_rate_hz.is_finite() && p.limb_rate_hz > 0.0) {
                return invalid(format!("class {c}: limb rate must be positive, got {}", p.limb_rate_hz));
            }
            if !(p.limb_extent_hz.is_finite() && p.limb_extent_hz >= 0.0 && p.torso_hz.is_finite()) {
                return invalid(format!("class {c}: Doppler parameters must be finite and extent ≥ 0"));
            }
            let peak = (p.torso_hz.abs() + p.limb_extent_hz) * (1.0 + self.jitter);
            if peak >= self.sample_rate_hz / 2.0 {
                return invalid(format!("class {c}: peak Doppler {peak} Hz aliases at {} Hz", self.sample_rate_hz));
            }
        }
        Ok(())
    }

    pub fn sample_id(&self, label: usize, index: usize) -> String {
        format!("{}_{index:04}", CLASS_NAMES[label])
    }
}

fn spread<R: Rng + ?Sized>(rng: &mut R, v: f64, jitter: f64) -> f64 {
    if jitter == 0.0 {
        v
    } else {
        v * (1.0 + rng.random_range(-jitter..jitter))
    }
}

/// Slow-time return of one body: a torso scatterer and two limbs whose
/// instantaneous Doppler is `env(t)·(f_torso + β·cos(2π f_m t + φ))`,
/// integrated to phase, plus complex Gaussian floor noise.
pub fn synth_slow_time<R: Rng + ?Sized>(cfg: &SynthConfig, label: usize, rng: &mut R) -> Vec<Complex64> {
    let p = &cfg.classes[label];
    let j = cfg.jitter;
    let torso = spread(rng, p.torso_hz, j);
    let rate = spread(rng, p.limb_rate_hz, j);
    let extent = spread(rng, p.limb_extent_hz, j);
    let center = 0.5 + if j > 0.0 { rng.random_range(-0.1..0.1) } else { 0.0 };
    let swing = rng.random_range(0.0..2.0 * PI);
    let mut phases = [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)];
    let amps = [spread(rng, 1.0, j), spread(rng, 0.5, j), spread(rng, 0.3, j)];
    let limb_scale = [0.0, 1.0, 0.6];
    let limb_offset = [0.0, 0.0, PI];
    let fs = cfg.sample_rate_hz;
    let n = cfg.n_chirps;
    let sigma = cfg.noise_floor / 2f64.sqrt();
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let t = m as f64 / fs;
        let env = p.envelope.eval(m as f64 / (n - 1).max(1) as f64, center);
        let mut z = Complex64::default();
        for s in 0..3 {
            z += Complex64::from_polar(amps[s], phases[s]);
            let f = env * (torso + limb_scale[s] * extent * (2.0 * PI * rate * t + swing + limb_offset[s]).cos());
            phases[s] += 2.0 * PI * f / fs;
        }
        if sigma > 0.0 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            z += Complex64::new(sigma * re, sigma * im);
        }
        out.push(z);
    }
    out
}

/// Raw FMCW recording of sample `index` of class `label`, with the body at
/// a random range bin. Deterministic in `(seed, label, index)`.
pub fn synth_recording(cfg: &SynthConfig, label: usize, index: usize) -> Result<RawRecording> {
    cfg.validate()?;
    if label >= NUM_CLASSES {
        return invalid(format!("label {label} out of range"));
    }
    let mut rng = rng_for(cfg.seed, &format!("synth/{label}/{index}"));
    let z = synth_slow_time(cfg, label, &mut rng);
    let n_fast = cfg.samples_per_chirp;
    let bin = rng.random_range(0..n_fast) as f64;
    let chirps = CMatrix::from_fn(n_fast, cfg.n_chirps, |k, m| {
        z[m] * Complex64::from_polar(1.0, 2.0 * PI * bin * k as f64 / n_fast as f64)
    });
    RawRecording::new(cfg.center_freq_hz, 1.0 / cfg.sample_rate_hz, chirps)
}

/// Every class × `samples_per_class` sample, preprocessed to maps, ordered
/// by class then index.
pub fn synth_generate(cfg: &SynthConfig) -> Result<Vec<LabeledSample>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(NUM_CLASSES * cfg.samples_per_class);
    for label in 0..NUM_CLASSES {
        for i in 0..cfg.samples_per_class {
            let rec = synth_recording(cfg, label, i)?;
            out.push(LabeledSample::new(cfg.sample_id(label, i), label, preprocess(&rec)?)?);
        }
    }
    Ok(out)
}

/// Zero-lag normalized correlation of two magnitude maps.
pub fn magnitude_correlation(a: &crate::dsp::DopplerTimeMap, b: &crate::dsp::DopplerTimeMap) -> f64 {
    let norm = |m: &crate::dsp::DopplerTimeMap| -> Vec<f64> {
        let v: Vec<f64> = m.values().as_slice().iter().map(|z| z.norm()).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - mean).collect()
    };
    let (x, y) = (norm(a), norm(b));
    let dot: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
    let nx: f64 = x.iter().map(|p| p * p).sum::<f64>().sqrt();
    let ny: f64 = y.iter().map(|q| q * q).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        0.0
    } else {
        dot / (nx * ny)
    }
}

/// Largest magnitude correlation between the first samples of any two
/// classes; values below 0.9 mean the classes are visibly distinct.
pub fn max_class_correlation(cfg: &SynthConfig) -> Result<f64> {
    cfg.validate()?;
    let maps = (0..NUM_CLASSES)
        .map(|c| preprocess(&synth_recording(cfg, c, 0)?))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..NUM_CLASSES {
        for j in i + 1..NUM_CLASSES {
            worst = worst.max(magnitude_correlation(&maps[i], &maps[j]));
        }
    }
    Ok(worst)
}
