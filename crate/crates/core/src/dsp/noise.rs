use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::DopplerTimeMap;
use crate::error::{invalid, Result};

/// Adds circularly-symmetric complex Gaussian noise so that the ratio of the
/// map's mean power to the noise variance equals `snr_db`.
pub fn add_noise_snr<R: Rng + ?Sized>(
    dtm: &DopplerTimeMap,
    snr_db: f64,
    rng: &mut R,
) -> Result<DopplerTimeMap> {
    if snr_db.is_nan() {
        return invalid("SNR is NaN");
    }
    let p_signal = dtm.mean_power();
    if p_signal <= 0.0 {
        return invalid("SNR is undefined for an all-zero map");
    }
    let variance = p_signal / 10f64.powf(snr_db / 10.0);
    if variance == 0.0 {
        return Ok(dtm.clone());
    }
    let sigma = (variance / 2.0).sqrt();
    let values = dtm.values().map(|z| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        z + Complex64::new(sigma * re, sigma * im)
    });
    DopplerTimeMap::new(values, dtm.duration_s(), dtm.doppler_span_hz())
}
