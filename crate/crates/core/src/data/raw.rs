use std::fmt::Write as _;

use num_complex::Complex64;

use crate::dsp::{self, CMatrix, DopplerTimeMap, StftConfig};
use crate::error::{invalid, Error, Result};

/// One radar recording: fast-time × slow-time complex samples and the
/// header metadata needed to interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecording {
    pub center_freq_hz: f64,
    pub chirp_duration_s: f64,
    /// `samples_per_chirp × n_chirps`.
    pub chirps: CMatrix,
}

impl RawRecording {
    pub fn new(center_freq_hz: f64, chirp_duration_s: f64, chirps: CMatrix) -> Result<Self> {
        if !(center_freq_hz.is_finite() && center_freq_hz > 0.0) {
            return invalid(format!("center frequency must be positive, got {center_freq_hz}"));
        }
        if !(chirp_duration_s.is_finite() && chirp_duration_s > 0.0) {
            return invalid(format!("chirp duration must be positive, got {chirp_duration_s}"));
        }
        if chirps.rows() == 0 || chirps.cols() == 0 {
            return invalid("recording has no samples");
        }
        Ok(Self {
            center_freq_hz,
            chirp_duration_s,
            chirps,
        })
    }

    pub fn samples_per_chirp(&self) -> usize {
        self.chirps.rows()
    }

    pub fn n_chirps(&self) -> usize {
        self.chirps.cols()
    }

    pub fn chirp_rate_hz(&self) -> f64 {
        1.0 / self.chirp_duration_s
    }
}

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        msg: msg.into(),
    })
}

/// Parses `a+bi` / `a-bi`. Exponent signs are not taken as the split point.
pub fn parse_complex(tok: &str) -> Option<Complex64> {
    let body = tok.trim().strip_suffix('i')?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
    let re: f64 = body[..split].parse().ok()?;
    let im: f64 = body[split..].trim_start_matches('+').parse().ok()?;
    Some(Complex64::new(re, im))
}

/// Shortest round-trip text for one sample.
pub fn format_complex(z: Complex64) -> String {
    format!("{:e}{:+e}i", z.re, z.im)
}

/// Parses the text recording format: four header lines (center frequency
/// in Hz, chirp duration in s, samples per chirp, number of chirps), then
/// one complex sample per line, chirp by chirp.
pub fn parse_raw_recording(text: &str) -> Result<RawRecording> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut header = |what: &str| -> Result<(usize, &str)> {
        match lines.next() {
            Some((n, l)) => Ok((n, l)),
            None => Err(Error::Truncated(format!("missing header line: {what}"))),
        }
    };
    let (n, l) = header("center frequency")?;
    let fc: f64 = l.parse().or_else(|_| parse_err(n, format!("bad center frequency '{l}'")))?;
    let (n, l) = header("chirp duration")?;
    let tc: f64 = l.parse().or_else(|_| parse_err(n, format!("bad chirp duration '{l}'")))?;
    let (n, l) = header("samples per chirp")?;
    let per_chirp: usize = l.parse().or_else(|_| parse_err(n, format!("bad samples-per-chirp '{l}'")))?;
    let (n, l) = header("number of chirps")?;
    let n_chirps: usize = l.parse().or_else(|_| parse_err(n, format!("bad chirp count '{l}'")))?;
    if !(fc.is_finite() && fc > 0.0) {
        return parse_err(1, "center frequency must be positive");
    }
    if !(tc.is_finite() && tc > 0.0) {
        return parse_err(2, "chirp duration must be positive");
    }
    if per_chirp == 0 || n_chirps == 0 {
        return parse_err(3, "sample and chirp counts must be positive");
    }
    let expected = per_chirp
        .checked_mul(n_chirps)
        .ok_or_else(|| Error::Parse { line: 4, msg: "sample count overflows".into() })?;
    let mut chirps = CMatrix::zeros(per_chirp, n_chirps);
    let mut count = 0usize;
    for (n, l) in lines {
        if l.is_empty() {
            continue;
        }
        if count == expected {
            return Err(Error::Truncated(format!(
                "header declares {expected} samples but more follow (line {n})"
            )));
        }
        let Some(z) = parse_complex(l) else {
            return parse_err(n, format!("bad complex sample '{l}'"));
        };
        if !(z.re.is_finite() && z.im.is_finite()) {
            return parse_err(n, "non-finite sample");
        }
        chirps[(count % per_chirp, count / per_chirp)] = z;
        count += 1;
    }
    if count != expected {
        return Err(Error::Truncated(format!(
            "header declares {expected} samples, found {count}"
        )));
    }
    RawRecording::new(fc, tc, chirps)
}

pub fn write_raw_recording(rec: &RawRecording) -> String {
    let mut s = String::with_capacity(rec.chirps.as_slice().len() * 48 + 64);
    let _ = writeln!(s, "{:e}", rec.center_freq_hz);
    let _ = writeln!(s, "{:e}", rec.chirp_duration_s);
    let _ = writeln!(s, "{}", rec.samples_per_chirp());
    let _ = writeln!(s, "{}", rec.n_chirps());
    for m in 0..rec.n_chirps() {
        for k in 0..rec.samples_per_chirp() {
            s.push_str(&format_complex(rec.chirps[(k, m)]));
            s.push('\n');
        }
    }
    s
}

/// Range FFT, sum over every range bin, Blackman STFT at the chirp rate,
/// and resampling to the 128×128 grid.
pub fn preprocess(rec: &RawRecording) -> Result<DopplerTimeMap> {
    let rate = rec.chirp_rate_hz();
    let rt = dsp::range_profile(&rec.chirps, rate)?;
    let sig = dsp::sum_range_bins(&rt, 0, rt.range_bins() - 1)?;
    let cfg = StftConfig::from_sample_rate(rate)?;
    let spec = dsp::stft(&sig, &cfg)?;
    dsp::resample_to_128(&spec, sig.duration_s(), rate)
}
