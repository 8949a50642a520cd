//! The eleven real-valued input formats derived from one complex map.

use microdoppler::data::{synth_generate, SynthConfig};
use microdoppler::repr::{to_channels, ReprFormat};

fn main() -> microdoppler::Result<()> {
    let cfg = SynthConfig { samples_per_class: 1, ..SynthConfig::default() };
    let sample = &synth_generate(&cfg)?[0];
    println!("sample {}", sample.id);
    println!("{:<26} {:>3}  channel ranges", "format", "ch");
    for fmt in ReprFormat::ALL {
        let stack = to_channels(&sample.dtm, fmt)?;
        let ranges: Vec<String> = (0..stack.channels())
            .map(|c| {
                let ch = stack.channel(c);
                let lo = ch.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = ch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                format!("{:?} [{lo:+.2}, {hi:+.2}]", fmt.kinds()[c])
            })
            .collect();
        println!("{:<26} {:>3}  {}", fmt.label(), stack.channels(), ranges.join("  "));
    }
    Ok(())
}
