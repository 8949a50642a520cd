//! Synthetic pendulum-limb recordings: class separability, the text
//! recording format round trip and preprocessing.

use microdoppler::data::{
    max_class_correlation, parse_raw_recording, preprocess, synth_recording, write_raw_recording, SynthConfig,
};
use microdoppler::CLASS_NAMES;

fn main() -> microdoppler::Result<()> {
    let cfg = SynthConfig::default();
    for (name, p) in CLASS_NAMES.iter().zip(&cfg.classes) {
        println!(
            "{name:<13} torso {:+6.1} Hz, limbs {:.1} Hz ± {:5.1} Hz, envelope {}",
            p.torso_hz,
            p.limb_rate_hz,
            p.limb_extent_hz,
            p.envelope.name()
        );
    }
    println!("largest cross-class magnitude correlation: {:.3}", max_class_correlation(&cfg)?);

    let rec = synth_recording(&cfg, 5, 0)?;
    let text = write_raw_recording(&rec);
    let back = parse_raw_recording(&text)?;
    println!(
        "recording {}: {} bytes of text, round trip exact: {}",
        cfg.sample_id(5, 0),
        text.len(),
        back == rec
    );
    let a = preprocess(&rec)?;
    let b = preprocess(&back)?;
    println!("maps identical after round trip: {}", a == b);
    Ok(())
}
