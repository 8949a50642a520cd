//! Per-class saliency of an unwrapped-phase model, exported as PGM images.
//! Usage: `saliency_maps [out_dir]`.

use std::path::PathBuf;

use microdoppler::analysis::aggregate_saliency;
use microdoppler::data::{phase_only_generate, Dataset, PhaseOnlyConfig, Subset};
use microdoppler::nn::write_pgm;
use microdoppler::repr::ReprFormat;
use microdoppler::train::{train_single, TrainConfig};
use microdoppler::{CLASS_NAMES, NUM_CLASSES};

fn main() -> microdoppler::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("microdoppler_saliency"));
    std::fs::create_dir_all(&out)?;
    let samples = phase_only_generate(&PhaseOnlyConfig { samples_per_class: 30, ..Default::default() })?;
    let data = Dataset::new(samples, 0)?;
    let cfg = TrainConfig {
        epochs: 6,
        batch_size: 16,
        lr: 1e-3,
        widths: [4, 8, 8, 16, 16],
        embed_dim: 32,
        ..TrainConfig::default()
    };
    let mut model = train_single::<f32>(ReprFormat::PhaseU, &data, &cfg)?.selected(cfg.selection);
    let test = data.subset(Subset::Test);
    for class in 0..NUM_CLASSES {
        let s = aggregate_saliency(&mut model, &test, class)?;
        let mean = &s.mean[0];
        let kept = s.thresholded[0].as_slice().iter().filter(|&&v| v > 0.0).count();
        write_pgm(mean, &out.join(format!("{}.pgm", CLASS_NAMES[class])))?;
        write_pgm(&s.thresholded[0], &out.join(format!("{}_thresholded.pgm", CLASS_NAMES[class])))?;
        println!(
            "{:<13} {} samples, peak {:.2e}, {kept} pixels above threshold",
            CLASS_NAMES[class],
            s.samples,
            mean.as_slice().iter().copied().fold(0.0, f64::max)
        );
    }
    println!("images in {}", out.display());
    Ok(())
}
