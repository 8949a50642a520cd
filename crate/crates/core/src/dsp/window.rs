use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Symmetric Blackman window of length `n`.
pub fn blackman_window(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return invalid(format!("Blackman window needs n ≥ 2, got {n}"));
    }
    let denom = (n - 1) as f64;
    Ok((0..n)
        .map(|k| {
            let x = k as f64 / denom;
            0.42 - 0.5 * (2.0 * PI * x).cos() + 0.08 * (4.0 * PI * x).cos()
        })
        .collect())
}
