//! Signal-processing kernels: range compression, range summation, STFT,
//! resampling onto the 128×128 Doppler-time grid, temporal phase unwrapping
//! and SNR-controlled noise injection.

mod noise;
mod resample;
mod stft;
mod unwrap;
mod window;

pub use noise::add_noise_snr;
pub use resample::{resample_grid, resample_to_128};
pub use stft::{range_profile, stft, sum_range_bins};
pub use unwrap::{unwrap_phase_time, unwrap_row, wrap_phase};
pub use window::blackman_window;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::matrix::Matrix;

/// Side length of the Doppler-time grid every representation is built on.
pub const MAP_SIZE: usize = 128;

/// Row holding zero Doppler after centering.
pub const ZERO_DOPPLER_ROW: usize = MAP_SIZE / 2;

pub type CMatrix = Matrix<Complex64>;

/// Slow-time complex signal obtained after range summation.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return invalid("signal has no samples");
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return invalid(format!("sample rate must be positive, got {sample_rate_hz}"));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return invalid("signal contains non-finite samples");
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

/// Range bins (rows) against slow time (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct RangeTimeMap {
    pub bins: CMatrix,
    pub chirp_rate_hz: f64,
}

impl RangeTimeMap {
    pub fn new(bins: CMatrix, chirp_rate_hz: f64) -> Result<Self> {
        if bins.rows() == 0 || bins.cols() == 0 {
            return invalid("range-time map must be at least 1×1");
        }
        if !(chirp_rate_hz.is_finite() && chirp_rate_hz > 0.0) {
            return invalid(format!("chirp rate must be positive, got {chirp_rate_hz}"));
        }
        if !all_finite(&bins) {
            return invalid("range-time map contains non-finite values");
        }
        Ok(Self {
            bins,
            chirp_rate_hz,
        })
    }

    pub fn range_bins(&self) -> usize {
        self.bins.rows()
    }

    pub fn slow_time_steps(&self) -> usize {
        self.bins.cols()
    }
}

/// 128×128 complex Doppler-time matrix. Rows are Doppler bins with zero
/// Doppler at row 64, columns are time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerTimeMap {
    values: CMatrix,
    duration_s: f64,
    doppler_span_hz: f64,
}

impl DopplerTimeMap {
    pub fn new(values: CMatrix, duration_s: f64, doppler_span_hz: f64) -> Result<Self> {
        if values.shape() != (MAP_SIZE, MAP_SIZE) {
            return invalid(format!(
                "Doppler-time map must be {MAP_SIZE}×{MAP_SIZE}, got {}×{}",
                values.rows(),
                values.cols()
            ));
        }
        if !(duration_s.is_finite() && duration_s > 0.0) {
            return invalid(format!("duration must be positive, got {duration_s}"));
        }
        if !(doppler_span_hz.is_finite() && doppler_span_hz > 0.0) {
            return invalid(format!("Doppler span must be positive, got {doppler_span_hz}"));
        }
        if !all_finite(&values) {
            return invalid("Doppler-time map contains non-finite values");
        }
        Ok(Self {
            values,
            duration_s,
            doppler_span_hz,
        })
    }

    pub fn values(&self) -> &CMatrix {
        &self.values
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    pub fn doppler_span_hz(&self) -> f64 {
        self.doppler_span_hz
    }

    /// Width of one Doppler row in Hz.
    pub fn doppler_bin_hz(&self) -> f64 {
        self.doppler_span_hz / MAP_SIZE as f64
    }

    /// Mean of |z|² over the map.
    pub fn mean_power(&self) -> f64 {
        let v = self.values.as_slice();
        v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len() as f64
    }

    pub fn max_magnitude(&self) -> f64 {
        self.values
            .as_slice()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Same map with every value multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            values: self.values.map(|z| z * factor),
            duration_s: self.duration_s,
            doppler_span_hz: self.doppler_span_hz,
        }
    }
}

/// Frame layout for the short-time Fourier transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub fft_len: usize,
}

impl StftConfig {
    /// Window length of the reference pipeline, in seconds.
    pub const WINDOW_S: f64 = 0.2;
    /// Hop between frames (0.2 s window with 0.19 s overlap).
    pub const HOP_S: f64 = 0.01;

    pub fn new(window_len: usize, hop: usize, fft_len: usize) -> Result<Self> {
        if window_len < 2 {
            return invalid(format!("window length must be at least 2, got {window_len}"));
        }
        if hop == 0 || hop > window_len {
            return invalid(format!("hop must lie in 1..={window_len}, got {hop}"));
        }
        if fft_len < window_len || !fft_len.is_power_of_two() {
            return invalid(format!(
                "fft length must be a power of two ≥ window length {window_len}, got {fft_len}"
            ));
        }
        Ok(Self {
            window_len,
            hop,
            fft_len,
        })
    }

    /// Derives integer frame parameters from the 0.2 s window / 0.01 s hop
    /// time constants. The window is capped at 128 samples and zero-padded to
    /// a 128-bin DFT when shorter.
    pub fn from_sample_rate(sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return invalid(format!("sample rate must be positive, got {sample_rate_hz}"));
        }
        let window_len = ((Self::WINDOW_S * sample_rate_hz).round() as usize).clamp(2, MAP_SIZE);
        let hop = ((Self::HOP_S * sample_rate_hz).round() as usize).clamp(1, window_len);
        Self::new(window_len, hop, MAP_SIZE)
    }

    /// Number of whole frames that fit in `len` samples.
    pub fn n_frames(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            (len - self.window_len) / self.hop + 1
        }
    }
}

fn all_finite(m: &CMatrix) -> bool {
    m.as_slice()
        .iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
}
