use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{blackman_window, CMatrix, ComplexSignal, RangeTimeMap, StftConfig};
use crate::error::{invalid, Result};
use crate::matrix::Matrix;

/// Range compression: DFT of every fast-time column of a
/// `fast_time × slow_time` chirp matrix.
pub fn range_profile(raw_chirps: &CMatrix, chirp_rate_hz: f64) -> Result<RangeTimeMap> {
    let (fast, slow) = raw_chirps.shape();
    if fast == 0 || slow == 0 {
        return invalid("raw chirp matrix is empty");
    }
    if fast < 2 {
        return invalid(format!("need at least 2 fast-time samples, got {fast}"));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(fast);
    let mut out = CMatrix::zeros(fast, slow);
    let mut column = vec![Complex64::default(); fast];
    for t in 0..slow {
        for (r, v) in column.iter_mut().enumerate() {
            *v = raw_chirps[(r, t)];
        }
        fft.process(&mut column);
        for (r, v) in column.iter().enumerate() {
            out[(r, t)] = *v;
        }
    }
    RangeTimeMap::new(out, chirp_rate_hz)
}

/// Complex sum over range bins `bin_lo..=bin_hi` for every slow-time step.
pub fn sum_range_bins(rt: &RangeTimeMap, bin_lo: usize, bin_hi: usize) -> Result<ComplexSignal> {
    if bin_lo > bin_hi || bin_hi >= rt.range_bins() {
        return invalid(format!(
            "range span [{bin_lo}, {bin_hi}] outside 0..{}",
            rt.range_bins()
        ));
    }
    let mut out = vec![Complex64::default(); rt.slow_time_steps()];
    for r in bin_lo..=bin_hi {
        for (acc, v) in out.iter_mut().zip(rt.bins.row(r)) {
            *acc += v;
        }
    }
    ComplexSignal::new(out, rt.chirp_rate_hz)
}

/// Blackman-windowed STFT. Returns `fft_len × n_frames` with rows circularly
/// shifted so zero frequency sits at row `fft_len / 2`.
pub fn stft(signal: &ComplexSignal, cfg: &StftConfig) -> Result<CMatrix> {
    let cfg = StftConfig::new(cfg.window_len, cfg.hop, cfg.fft_len)?;
    let x = signal.samples();
    if x.len() < cfg.window_len {
        return invalid(format!(
            "signal of {} samples is shorter than the {}-sample window",
            x.len(),
            cfg.window_len
        ));
    }
    let window = blackman_window(cfg.window_len)?;
    let n_frames = cfg.n_frames(x.len());
    let n = cfg.fft_len;
    let half = n / 2;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut out = Matrix::zeros(n, n_frames);
    let mut buf = vec![Complex64::default(); n];
    for f in 0..n_frames {
        let start = f * cfg.hop;
        buf.fill(Complex64::default());
        for (k, (b, w)) in buf.iter_mut().zip(&window).enumerate() {
            *b = x[start + k] * *w;
        }
        fft.process(&mut buf);
        for (bin, v) in buf.iter().enumerate() {
            out[((bin + half) % n, f)] = *v;
        }
    }
    Ok(out)
}
