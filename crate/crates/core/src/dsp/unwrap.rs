use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::matrix::Matrix;

const TAU: f64 = 2.0 * PI;
const RANGE_TOL: f64 = 1e-9;

/// Maps any angle into (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let w = x - TAU * ((x + PI) / TAU).floor();
    // floor maps the interval to [−π, π); move the closed end over
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

/// Unwraps one row in place of a copy: each sample gets the multiple of 2π
/// that brings its difference to the previous (corrected) sample into (−π, π].
pub fn unwrap_row(row: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(row.len());
    let mut turns = 0.0_f64;
    for (t, &p) in row.iter().enumerate() {
        if t > 0 {
            let d = p - row[t - 1];
            if d > PI || d <= -PI {
                turns -= ((d - PI) / TAU).ceil();
            }
        }
        out.push(p + TAU * turns);
    }
    out
}

/// Temporal unwrapping of a wrapped phase map: every row (Doppler bin) is
/// unwrapped left to right, the first column is left untouched.
pub fn unwrap_phase_time(phase: &Matrix<f64>) -> Result<Matrix<f64>> {
    if let Some(bad) = phase
        .as_slice()
        .iter()
        .find(|v| !(v.abs() <= PI + RANGE_TOL))
    {
        return invalid(format!("wrapped phase value {bad} outside [−π, π]"));
    }
    let mut out = Vec::with_capacity(phase.as_slice().len());
    for r in 0..phase.rows() {
        out.extend(unwrap_row(phase.row(r)));
    }
    Ok(Matrix::from_vec(phase.rows(), phase.cols(), out))
}
