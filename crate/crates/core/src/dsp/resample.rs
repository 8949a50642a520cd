use num_complex::Complex64;

use super::{CMatrix, DopplerTimeMap, MAP_SIZE};
use crate::error::{invalid, Result};

/// Corner-aligned bilinear resampling onto a `rows × cols` grid. Real and
/// imaginary planes are interpolated independently.
pub fn resample_grid(m: &CMatrix, rows: usize, cols: usize) -> Result<CMatrix> {
    let (src_r, src_c) = m.shape();
    if src_r < 2 || src_c < 2 {
        return invalid(format!("resampling needs at least 2×2 input, got {src_r}×{src_c}"));
    }
    if rows < 2 || cols < 2 {
        return invalid(format!("resampling target must be at least 2×2, got {rows}×{cols}"));
    }
    let row_axis = axis(src_r, rows);
    let col_axis = axis(src_c, cols);
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        let (r0, fy) = row_axis[i];
        let (c0, fx) = col_axis[j];
        let a = m[(r0, c0)];
        let b = m[(r0, c0 + 1)];
        let c = m[(r0 + 1, c0)];
        let d = m[(r0 + 1, c0 + 1)];
        let blend = |a: f64, b: f64, c: f64, d: f64| {
            (1.0 - fy) * ((1.0 - fx) * a + fx * b) + fy * ((1.0 - fx) * c + fx * d)
        };
        Complex64::new(blend(a.re, b.re, c.re, d.re), blend(a.im, b.im, c.im, d.im))
    }))
}

/// Resamples a STFT matrix onto the 128×128 Doppler-time grid.
pub fn resample_to_128(m: &CMatrix, duration_s: f64, doppler_span_hz: f64) -> Result<DopplerTimeMap> {
    let values = resample_grid(m, MAP_SIZE, MAP_SIZE)?;
    DopplerTimeMap::new(values, duration_s, doppler_span_hz)
}

/// Lower source index and fractional offset for each output coordinate.
fn axis(src: usize, dst: usize) -> Vec<(usize, f64)> {
    let scale = (src - 1) as f64;
    let denom = (dst - 1) as f64;
    (0..dst)
        .map(|i| {
            let pos = i as f64 * scale / denom;
            let lo = (pos.floor() as usize).min(src - 2);
            (lo, pos - lo as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_on_128_grid() {
        let m = CMatrix::from_fn(128, 128, |r, c| Complex64::new(r as f64 * 0.37 - c as f64, (r * c) as f64 * 1e-3));
        let out = resample_to_128(&m, 1.0, 1.0).unwrap();
        assert_eq!(out.values(), &m);
    }

    #[test]
    fn corners_of_two_by_two() {
        let m = CMatrix::from_vec(
            2,
            2,
            [0.0, 1.0, 2.0, 3.0].iter().map(|&v| Complex64::new(v, -v)).collect(),
        );
        let out = resample_to_128(&m, 1.0, 1.0).unwrap();
        let v = out.values();
        assert_eq!(v[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(v[(0, 127)], Complex64::new(1.0, -1.0));
        assert_eq!(v[(127, 0)], Complex64::new(2.0, -2.0));
        assert_eq!(v[(127, 127)], Complex64::new(3.0, -3.0));
        // bilinear field here is 2y + x on the unit square
        let y = 63.0 / 127.0;
        let x = 64.0 / 127.0;
        assert!((v[(63, 64)].re - (2.0 * y + x)).abs() < 1e-12);
    }

    #[test]
    fn constant_stays_constant() {
        let z = Complex64::new(0.25, -1.5);
        let m = CMatrix::from_vec(5, 9, vec![z; 45]);
        let out = resample_grid(&m, 128, 128).unwrap();
        assert!(out.as_slice().iter().all(|v| (v - z).norm() < 1e-12));
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(resample_grid(&CMatrix::zeros(1, 5), 128, 128).is_err());
    }
}
