//! Cross-representation error analysis over five single-domain models:
//! agreement matrix, unique-correct counts, oracle upper bound and margin.

use microdoppler::analysis::{
    error_agreement_matrix, oracle_upper_bound, potential_margin, unique_correct_counts, write_agreement_csv,
    AgreementMode, RecordSet,
};
use microdoppler::data::{synth_generate, Dataset, Subset, SynthConfig};
use microdoppler::repr::ReprFormat;
use microdoppler::train::{accuracy, evaluate, train_single, TrainConfig};

fn main() -> microdoppler::Result<()> {
    let samples = synth_generate(&SynthConfig { samples_per_class: 20, ..SynthConfig::default() })?;
    let data = Dataset::new(samples, 0)?;
    let cfg = TrainConfig {
        epochs: 10,
        batch_size: 16,
        lr: 1e-3,
        widths: [4, 8, 8, 16, 16],
        embed_dim: 32,
        ..TrainConfig::default()
    };
    let test = data.subset(Subset::Test);
    let mut groups = Vec::new();
    for fmt in [ReprFormat::Real, ReprFormat::Imag, ReprFormat::Magnitude, ReprFormat::PhaseW, ReprFormat::PhaseU] {
        let mut model = train_single::<f32>(fmt, &data, &cfg)?.selected(cfg.selection);
        let records = evaluate(&mut model, &test, None)?;
        println!("{:<10} accuracy {:.3}", fmt.name(), accuracy(&records));
        groups.push(records);
    }
    let set = RecordSet::align(&groups)?;

    let table = error_agreement_matrix(&set, AgreementMode::SameLabel);
    let mut csv = Vec::new();
    write_agreement_csv(&table, &mut csv)?;
    println!("\nerror agreement (column: whose errors, row: compared model)\n{}", String::from_utf8_lossy(&csv));

    let unique = unique_correct_counts(&set);
    for (r, c) in unique.representations.iter().zip(&unique.counts) {
        println!("unique correct {r:<10} {c}");
    }
    let upper = oracle_upper_bound(&set);
    println!("upper bound {} of {} = {:.3}", upper.correct_any, upper.total, upper.fraction);
    let m = potential_margin(&set, "magnitude")?;
    println!("margin {:.3} + {}/{} = {:.3}", m.base_accuracy, m.recoverable, m.total, m.potential);
    Ok(())
}
