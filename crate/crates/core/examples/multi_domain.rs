//! Multi-domain model: five encoders share one head, each step trains a
//! random pair; any domain subset can be evaluated afterwards.

use microdoppler::data::{synth_generate, Dataset, Subset, SynthConfig};
use microdoppler::repr::ReprFormat;
use microdoppler::train::{evaluate_clean_and_noisy, train_multi, MultiView, TrainConfig};

fn main() -> microdoppler::Result<()> {
    let samples = synth_generate(&SynthConfig { samples_per_class: 20, ..SynthConfig::default() })?;
    let data = Dataset::new(samples, 0)?;
    let cfg = TrainConfig {
        epochs: 20,
        batch_size: 16,
        lr: 1e-3,
        widths: [4, 8, 8, 16, 16],
        embed_dim: 32,
        ..TrainConfig::default()
    };
    let run = train_multi::<f32>(&data, &cfg)?;
    println!("optimizer steps {}, per-domain participation {:?}", run.steps, run.domain_steps);
    let mut model = run.selected(cfg.selection);
    let test = data.subset(Subset::Test);
    for fmt in ReprFormat::ALL {
        let r = evaluate_clean_and_noisy(&mut MultiView::for_format(&mut model, fmt)?, &test, 0)?;
        println!("{:<26} clean {:.3}  0 dB {:.3}", fmt.label(), r.accuracy_clean, r.accuracy_noisy);
    }
    Ok(())
}
