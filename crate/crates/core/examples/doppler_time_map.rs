//! Raw chirps to a 128×128 complex Doppler-time map, step by step.

use microdoppler::data::{synth_recording, SynthConfig};
use microdoppler::dsp::{range_profile, resample_to_128, stft, sum_range_bins, StftConfig, ZERO_DOPPLER_ROW};
use microdoppler::CLASS_NAMES;

fn main() -> microdoppler::Result<()> {
    let cfg = SynthConfig::default();
    let rec = synth_recording(&cfg, 0, 0)?;
    println!(
        "{}: {} chirps × {} fast-time samples at {} Hz",
        CLASS_NAMES[0],
        rec.n_chirps(),
        rec.samples_per_chirp(),
        rec.chirp_rate_hz()
    );

    let rt = range_profile(&rec.chirps, rec.chirp_rate_hz())?;
    let power: Vec<f64> = (0..rt.range_bins())
        .map(|r| rt.bins.row(r).iter().map(|z| z.norm_sqr()).sum())
        .collect();
    println!("range-bin power: {power:.1?}");

    let signal = sum_range_bins(&rt, 0, rt.range_bins() - 1)?;
    let frames = StftConfig::from_sample_rate(signal.sample_rate_hz())?;
    let spec = stft(&signal, &frames)?;
    println!(
        "STFT: window {} hop {} → {}×{}",
        frames.window_len,
        frames.hop,
        spec.rows(),
        spec.cols()
    );

    let dtm = resample_to_128(&spec, signal.duration_s(), signal.sample_rate_hz())?;
    println!(
        "map 128×128, {:.3} s, {:.2} Hz per Doppler row",
        dtm.duration_s(),
        dtm.doppler_bin_hz()
    );

    let v = dtm.values();
    let row_energy = |r: usize| (0..v.cols()).map(|c| v[(r, c)].norm_sqr()).sum::<f64>();
    let peak = (0..v.rows()).max_by(|&a, &b| row_energy(a).total_cmp(&row_energy(b))).unwrap();
    println!(
        "strongest row {peak} ({:+.1} Hz), zero Doppler at row {ZERO_DOPPLER_ROW}",
        (peak as f64 - ZERO_DOPPLER_ROW as f64) * dtm.doppler_bin_hz()
    );
    Ok(())
}
