//! Single-domain classifiers on a set whose classes differ only in phase:
//! magnitude input should sit near chance, unwrapped phase well above it.

use microdoppler::data::{phase_only_generate, Dataset, PhaseOnlyConfig, Subset};
use microdoppler::repr::ReprFormat;
use microdoppler::train::{evaluate_clean_and_noisy, train_single, TrainConfig};

fn main() -> microdoppler::Result<()> {
    let samples = phase_only_generate(&PhaseOnlyConfig { samples_per_class: 40, ..Default::default() })?;
    let data = Dataset::new(samples, 0)?;
    let cfg = TrainConfig {
        epochs: 6,
        batch_size: 16,
        lr: 1e-3,
        widths: [4, 8, 8, 16, 16],
        embed_dim: 32,
        ..TrainConfig::default()
    };
    let test = data.subset(Subset::Test);
    for fmt in [ReprFormat::Magnitude, ReprFormat::PhaseW, ReprFormat::PhaseU] {
        let run = train_single::<f32>(fmt, &data, &cfg)?;
        let last = run.metrics.last().expect("epochs > 0");
        let mut model = run.selected(cfg.selection);
        let r = evaluate_clean_and_noisy(&mut model, &test, 0)?;
        println!(
            "{:<10} train loss {:.3}  val loss {:.3}  test clean {:.3}  0 dB {:.3}",
            fmt.name(),
            last.train_loss,
            last.val_loss,
            r.accuracy_clean,
            r.accuracy_noisy
        );
    }
    Ok(())
}
