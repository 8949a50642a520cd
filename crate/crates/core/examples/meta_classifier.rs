//! Meta module on top of a frozen multi-domain model, in the four
//! input/activation configurations.

use microdoppler::data::{synth_generate, Dataset, Subset, SynthConfig};
use microdoppler::nn::{MetaActivation, MetaInput};
use microdoppler::train::{
    evaluate_clean_and_noisy, train_meta, train_multi, MetaBase, MetaClassifier, MultiView, TrainConfig,
};
use microdoppler::repr::ReprFormat;

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
    let test = data.subset(Subset::Test);
    let mut multi = train_multi::<f32>(&data, &cfg)?.selected(cfg.selection);
    let base_acc = evaluate_clean_and_noisy(&mut MultiView::for_format(&mut multi, ReprFormat::Polar2U)?, &test, 0)?;
    println!("base polar2-u: {:.3}", base_acc.accuracy_clean);

    let meta_cfg = TrainConfig { epochs: 10, ..cfg };
    for input in [MetaInput::Confidences, MetaInput::Embeddings] {
        for activation in [MetaActivation::Linear, MetaActivation::LeakyRelu] {
            let run = train_meta(MetaBase::Multi(multi.clone()), input, activation, &data, &meta_cfg)?;
            let meta = run.selected(meta_cfg.selection);
            let mut base = run.base;
            let r = evaluate_clean_and_noisy(&mut MetaClassifier { base: &mut base, meta: &meta }, &test, 0)?;
            println!("{:<12} {:<11} {:.3}", input.name(), activation.name(), r.accuracy_clean);
        }
    }
    Ok(())
}
