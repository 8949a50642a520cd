//! Real-valued channel formats derived from the complex Doppler-time map.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::dsp::{unwrap_phase_time, DopplerTimeMap, MAP_SIZE};
use crate::error::{invalid, Error, Result};
use crate::matrix::Matrix;

/// One real plane extracted from the complex map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelKind {
    Magnitude,
    PhaseWrapped,
    PhaseUnwrapped,
    Real,
    Imag,
}

impl ChannelKind {
    fn is_phase(self) -> bool {
        matches!(self, ChannelKind::PhaseWrapped | ChannelKind::PhaseUnwrapped)
    }
}

/// The eleven input representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReprFormat {
    Magnitude,
    PhaseW,
    PhaseU,
    Polar2W,
    Polar2U,
    Real,
    Imag,
    Rect2,
    PolRect4W,
    PolRect4U,
    PolRect5,
}

use ChannelKind as K;

impl ReprFormat {
    pub const ALL: [ReprFormat; 11] = [
        ReprFormat::Magnitude,
        ReprFormat::PhaseW,
        ReprFormat::PhaseU,
        ReprFormat::Polar2W,
        ReprFormat::Polar2U,
        ReprFormat::Real,
        ReprFormat::Imag,
        ReprFormat::Rect2,
        ReprFormat::PolRect4W,
        ReprFormat::PolRect4U,
        ReprFormat::PolRect5,
    ];

    /// Ordered channel composition.
    pub fn kinds(self) -> &'static [ChannelKind] {
        match self {
            ReprFormat::Magnitude => &[K::Magnitude],
            ReprFormat::PhaseW => &[K::PhaseWrapped],
            ReprFormat::PhaseU => &[K::PhaseUnwrapped],
            ReprFormat::Real => &[K::Real],
            ReprFormat::Imag => &[K::Imag],
            ReprFormat::Polar2W => &[K::Magnitude, K::PhaseWrapped],
            ReprFormat::Polar2U => &[K::Magnitude, K::PhaseUnwrapped],
            ReprFormat::Rect2 => &[K::Real, K::Imag],
            ReprFormat::PolRect4W => &[K::Real, K::Imag, K::Magnitude, K::PhaseWrapped],
            ReprFormat::PolRect4U => &[K::Real, K::Imag, K::Magnitude, K::PhaseUnwrapped],
            ReprFormat::PolRect5 => &[
                K::Real,
                K::Imag,
                K::Magnitude,
                K::PhaseWrapped,
                K::PhaseUnwrapped,
            ],
        }
    }

    pub fn channels(self) -> usize {
        self.kinds().len()
    }

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            ReprFormat::Magnitude => "magnitude",
            ReprFormat::PhaseW => "phase-w",
            ReprFormat::PhaseU => "phase-u",
            ReprFormat::Polar2W => "polar2-w",
            ReprFormat::Polar2U => "polar2-u",
            ReprFormat::Real => "real",
            ReprFormat::Imag => "imag",
            ReprFormat::Rect2 => "rect2",
            ReprFormat::PolRect4W => "polrect4-w",
            ReprFormat::PolRect4U => "polrect4-u",
            ReprFormat::PolRect5 => "polrect5",
        }
    }

    /// Row label used in accuracy tables.
    pub fn label(self) -> &'static str {
        match self {
            ReprFormat::Magnitude => "Magnitude",
            ReprFormat::PhaseW => "Phase (W)",
            ReprFormat::PhaseU => "Phase (U)",
            ReprFormat::Polar2W => "Polar 2-channel (W)",
            ReprFormat::Polar2U => "Polar 2-channel (U)",
            ReprFormat::Real => "Real",
            ReprFormat::Imag => "Imaginary",
            ReprFormat::Rect2 => "Rectangular 2-channel",
            ReprFormat::PolRect4W => "Pol-Rect 4-channel (W)",
            ReprFormat::PolRect4U => "Pol-Rect 4-channel (U)",
            ReprFormat::PolRect5 => "Pol-Rect 5-channel (U&W)",
        }
    }

    /// Single-channel format carrying exactly one channel kind.
    pub fn single(kind: ChannelKind) -> ReprFormat {
        match kind {
            K::Magnitude => ReprFormat::Magnitude,
            K::PhaseWrapped => ReprFormat::PhaseW,
            K::PhaseUnwrapped => ReprFormat::PhaseU,
            K::Real => ReprFormat::Real,
            K::Imag => ReprFormat::Imag,
        }
    }
}

impl fmt::Display for ReprFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReprFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        ReprFormat::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown representation format '{s}'")))
    }
}

/// `C × H × W` real channel stack. `scale` records the divisor applied to
/// the amplitude channels (magnitude, real, imaginary) so the original
/// values are `data · scale`; phase channels are divided by π once
/// normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStack {
    format: ReprFormat,
    height: usize,
    width: usize,
    data: Vec<f64>,
    /// Largest |z| of the map the amplitude channels currently refer to.
    max_magnitude: f64,
    scale: f64,
    phase_scale: f64,
}

impl ChannelStack {
    pub fn format(&self) -> ReprFormat {
        self.format
    }

    pub fn channels(&self) -> usize {
        self.format.channels()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn phase_scale(&self) -> f64 {
        self.phase_scale
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub fn channel_matrix(&self, c: usize) -> Matrix<f64> {
        Matrix::from_vec(self.height, self.width, self.channel(c).to_vec())
    }

    /// Channel values as `f32`, for feeding a network.
    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|&v| v as f32).collect()
    }
}

/// Unnormalized channel decomposition of a map.
pub fn raw_channels(dtm: &DopplerTimeMap, fmt: ReprFormat) -> Result<ChannelStack> {
    let values = dtm.values();
    let plane = values.rows() * values.cols();
    let wrapped = values.map(|z| z.arg());
    let unwrapped = if fmt.kinds().contains(&K::PhaseUnwrapped) {
        Some(unwrap_phase_time(&wrapped)?)
    } else {
        None
    };
    let mut data = Vec::with_capacity(plane * fmt.channels());
    for &kind in fmt.kinds() {
        match kind {
            K::Magnitude => data.extend(values.as_slice().iter().map(|z| z.norm())),
            K::PhaseWrapped => data.extend_from_slice(wrapped.as_slice()),
            K::PhaseUnwrapped => data.extend_from_slice(unwrapped.as_ref().unwrap().as_slice()),
            K::Real => data.extend(values.as_slice().iter().map(|z| z.re)),
            K::Imag => data.extend(values.as_slice().iter().map(|z| z.im)),
        }
    }
    Ok(ChannelStack {
        format: fmt,
        height: values.rows(),
        width: values.cols(),
        data,
        max_magnitude: dtm.max_magnitude(),
        scale: 1.0,
        phase_scale: 1.0,
    })
}

/// Per-sample normalization: amplitude channels are divided by the sample's
/// largest magnitude, both phase channels by π (unwrapped phase is not
/// clamped). An all-zero map leaves every channel at zero.
pub fn normalize(stack: &ChannelStack) -> Result<ChannelStack> {
    if stack.data.iter().any(|v| !v.is_finite()) || !stack.max_magnitude.is_finite() {
        return invalid("cannot normalize a stack with non-finite values");
    }
    let mut out = stack.clone();
    let plane = stack.height * stack.width;
    let amp = stack.max_magnitude;
    for (c, &kind) in stack.format.kinds().iter().enumerate() {
        let chan = &mut out.data[c * plane..(c + 1) * plane];
        if kind.is_phase() {
            chan.iter_mut().for_each(|v| *v /= PI);
        } else if amp > 0.0 {
            chan.iter_mut().for_each(|v| *v /= amp);
        }
    }
    if amp > 0.0 {
        out.max_magnitude = 1.0;
        out.scale = stack.scale * amp;
    }
    out.phase_scale = stack.phase_scale * PI;
    Ok(out)
}

/// Normalized channel stack in the requested format.
pub fn to_channels(dtm: &DopplerTimeMap, fmt: ReprFormat) -> Result<ChannelStack> {
    normalize(&raw_channels(dtm, fmt)?)
}

const STACK_MAGIC: &[u8; 4] = b"UDCS";
const STACK_HEADER_LEN: usize = 16;

/// Serializes a stack: 16-byte header (magic, u8 channels, u16 height,
/// u16 width, reserved zeros) then row-major little-endian `f32` values.
pub fn write_stack<W: Write>(stack: &ChannelStack, mut w: W) -> Result<()> {
    write_planes(&mut w, stack.channels(), stack.height, stack.width, &stack.data)
}

pub(crate) fn write_planes<W: Write>(
    w: &mut W,
    channels: usize,
    height: usize,
    width: usize,
    data: &[f64],
) -> Result<()> {
    if channels > u8::MAX as usize || height > u16::MAX as usize || width > u16::MAX as usize {
        return invalid("stack dimensions do not fit the header");
    }
    let mut header = [0u8; STACK_HEADER_LEN];
    header[..4].copy_from_slice(STACK_MAGIC);
    header[4] = channels as u8;
    header[5..7].copy_from_slice(&(height as u16).to_le_bytes());
    header[7..9].copy_from_slice(&(width as u16).to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(data.len() * 4);
    for v in data {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Planes read back from a stack file.
#[derive(Debug, Clone, PartialEq)]
pub struct StackFile {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

pub fn read_stack<R: Read>(mut r: R) -> Result<StackFile> {
    let mut header = [0u8; STACK_HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("stack file shorter than its header".into()))?;
    if &header[..4] != STACK_MAGIC {
        return Err(Error::Format("missing UDCS magic".into()));
    }
    let channels = header[4] as usize;
    let height = u16::from_le_bytes([header[5], header[6]]) as usize;
    let width = u16::from_le_bytes([header[7], header[8]]) as usize;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let expected = channels * height * width * 4;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "stack body has {} bytes, header implies {expected}",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok(StackFile {
        channels,
        height,
        width,
        data,
    })
}

/// Convenience used by the preprocessing cache: the complex map stored as
/// an unnormalized real/imaginary pair.
pub fn write_complex_map<W: Write>(dtm: &DopplerTimeMap, mut w: W) -> Result<()> {
    let stack = raw_channels(dtm, ReprFormat::Rect2)?;
    write_stack(&stack, &mut w)
}

pub fn read_complex_map<R: Read>(r: R, duration_s: f64, doppler_span_hz: f64) -> Result<DopplerTimeMap> {
    let f = read_stack(r)?;
    if f.channels != 2 || f.height != MAP_SIZE || f.width != MAP_SIZE {
        return Err(Error::Format(format!(
            "complex map cache must be 2×{MAP_SIZE}×{MAP_SIZE}, got {}×{}×{}",
            f.channels, f.height, f.width
        )));
    }
    let plane = MAP_SIZE * MAP_SIZE;
    let values = Matrix::from_fn(MAP_SIZE, MAP_SIZE, |r, c| {
        let i = r * MAP_SIZE + c;
        num_complex::Complex64::new(f.data[i] as f64, f.data[plane + i] as f64)
    });
    DopplerTimeMap::new(values, duration_s, doppler_span_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::CMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant(z: Complex64) -> DopplerTimeMap {
        DopplerTimeMap::new(CMatrix::from_vec(128, 128, vec![z; 128 * 128]), 1.0, 1.0).unwrap()
    }

    fn random_map(seed: u64) -> DopplerTimeMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = CMatrix::from_fn(128, 128, |_, _| {
            Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
        });
        DopplerTimeMap::new(v, 1.0, 1.0).unwrap()
    }

    #[test]
    fn channel_counts() {
        let expected = [1, 1, 1, 2, 2, 1, 1, 2, 4, 4, 5];
        for (f, n) in ReprFormat::ALL.iter().zip(expected) {
            assert_eq!(f.channels(), n, "{f}");
            assert_eq!(f.name().parse::<ReprFormat>().unwrap(), *f);
        }
        assert!("nope".parse::<ReprFormat>().is_err());
    }

    #[test]
    fn unit_magnitude_before_normalization() {
        let s = raw_channels(&constant(Complex64::new(1.0, 0.0)), ReprFormat::Magnitude).unwrap();
        assert!(s.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn wrapped_phase_of_i() {
        let s = raw_channels(&constant(Complex64::new(0.0, 1.0)), ReprFormat::PhaseW).unwrap();
        assert!(s.data().iter().all(|&v| (v - PI / 2.0).abs() < 1e-15));
        let n = normalize(&s).unwrap();
        assert!(n.data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn rect_matches_magnitude_pythagoras() {
        let m = random_map(3);
        let rect = raw_channels(&m, ReprFormat::Rect2).unwrap();
        let mag = raw_channels(&m, ReprFormat::Magnitude).unwrap();
        for i in 0..128 * 128 {
            let lhs = rect.channel(0)[i].powi(2) + rect.channel(1)[i].powi(2);
            assert!((lhs - mag.data()[i].powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_magnitude_peaks_at_one() {
        let mut v = CMatrix::zeros(128, 128);
        v[(3, 9)] = Complex64::new(4.0, 0.0);
        v[(5, 5)] = Complex64::new(1.0, 1.0);
        let s = to_channels(&DopplerTimeMap::new(v, 1.0, 1.0).unwrap(), ReprFormat::Magnitude).unwrap();
        assert_eq!(s.data().iter().cloned().fold(0.0, f64::max), 1.0);
        assert_eq!(s.scale(), 4.0);
    }

    #[test]
    fn normalized_rect_within_unit_disc() {
        let m = random_map(11);
        let s = to_channels(&m, ReprFormat::Rect2).unwrap();
        let peak = m.max_magnitude();
        let mut best = 0.0_f64;
        for (i, z) in m.values().as_slice().iter().enumerate() {
            let r2 = s.channel(0)[i].powi(2) + s.channel(1)[i].powi(2);
            assert!(r2 <= 1.0 + 1e-12);
            assert!((r2 - (z.norm() / peak).powi(2)).abs() < 1e-12);
            best = best.max(r2);
        }
        assert!((best - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_map_stays_zero() {
        let s = to_channels(&constant(Complex64::new(0.0, 0.0)), ReprFormat::PolRect5).unwrap();
        assert!(s.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn polrect5_extends_polrect4w() {
        let m = random_map(5);
        let a = to_channels(&m, ReprFormat::PolRect5).unwrap();
        let b = to_channels(&m, ReprFormat::PolRect4W).unwrap();
        assert_eq!(&a.data()[..4 * 128 * 128], b.data());
    }

    #[test]
    fn stack_file_round_trip() {
        let m = random_map(8);
        let s = to_channels(&m, ReprFormat::Polar2U).unwrap();
        let mut buf = Vec::new();
        write_stack(&s, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"UDCS");
        assert_eq!(buf.len(), 16 + 2 * 128 * 128 * 4);
        let back = read_stack(&buf[..]).unwrap();
        assert_eq!((back.channels, back.height, back.width), (2, 128, 128));
        assert_eq!(back.data, s.to_f32());
        assert!(read_stack(&buf[..20]).is_err());
    }
}
