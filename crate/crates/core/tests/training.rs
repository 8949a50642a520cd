mod common;

use microdoppler::data::{phase_only_generate, Dataset, LabeledSample, PhaseOnlyConfig, Subset};
use microdoppler::dsp::DopplerTimeMap;
use microdoppler::nn::{MetaActivation, MetaInput};
use microdoppler::repr::ReprFormat;
use microdoppler::train::{
    accuracy, evaluate, evaluate_clean_and_noisy, train_meta, train_multi, train_single, Classifier, MetaBase,
    ModelSelection, NoiseSpec,
};
use microdoppler::{Result, NUM_CLASSES};

fn phase_only_set(per_class: usize, seed: u64) -> Dataset {
    let cfg = PhaseOnlyConfig { samples_per_class: per_class, seed, ..PhaseOnlyConfig::default() };
    Dataset::new(phase_only_generate(&cfg).unwrap(), seed).unwrap()
}

#[test]
fn phase_carried_classes_are_learned_from_unwrapped_phase() {
    let data = phase_only_set(40, 0);
    let run = train_single::<f32>(ReprFormat::PhaseU, &data, &common::tiny_config(15)).unwrap();
    let mut model = run.selected(ModelSelection::Final);
    let test = data.subset(Subset::Test);
    let acc = accuracy(&evaluate(&mut model, &test, None).unwrap());
    assert!(acc >= 0.95, "test accuracy {acc}");
    assert_eq!(run.metrics.len(), 15);
    assert!(run.metrics.last().unwrap().train_loss < run.metrics[0].train_loss);
}

#[test]
fn invalid_configs_are_rejected() {
    let data = phase_only_set(4, 0);
    for cfg in [
        common::tiny_config(0),
        microdoppler::train::TrainConfig { batch_size: 1, ..common::tiny_config(1) },
        microdoppler::train::TrainConfig { lr: 0.0, ..common::tiny_config(1) },
    ] {
        assert!(train_single::<f32>(ReprFormat::Magnitude, &data, &cfg).is_err());
    }
}

#[test]
fn identical_seeds_give_identical_runs() {
    let data = phase_only_set(4, 1);
    let cfg = common::tiny_config(2);
    let a = train_single::<f32>(ReprFormat::Rect2, &data, &cfg).unwrap();
    let b = train_single::<f32>(ReprFormat::Rect2, &data, &cfg).unwrap();
    assert_eq!(a.metrics, b.metrics);
    for ((_, p), (_, q)) in a.model.store.iter().zip(b.model.store.iter()) {
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(p.value.data()), bits(q.value.data()), "{}", p.name);
    }
}

#[test]
fn multi_domain_training_activates_each_domain_in_two_of_five_steps() {
    let data = phase_only_set(10, 2);
    let cfg = microdoppler::train::TrainConfig { batch_size: 4, ..common::tiny_config(3) };
    let run = train_multi::<f32>(&data, &cfg).unwrap();
    assert_eq!(run.domain_steps.iter().sum::<usize>(), 2 * run.steps);
    let n = run.steps as f64;
    let sigma = (n * 0.4 * 0.6).sqrt();
    for (d, &c) in run.domain_steps.iter().enumerate() {
        assert!((c as f64 - 0.4 * n).abs() <= 3.0 * sigma, "domain {d}: {c} of {n}");
    }
    assert_eq!(run.metrics.len(), 3);
}

#[test]
fn meta_training_leaves_the_base_untouched() {
    let data = phase_only_set(6, 3);
    let multi = train_multi::<f32>(&data, &common::tiny_config(1)).unwrap();
    let base = MetaBase::Multi(multi.selected(ModelSelection::Final));
    let before = base.param_hash();
    for input in [MetaInput::Embeddings, MetaInput::Confidences] {
        let run = train_meta(base.clone(), input, MetaActivation::LeakyRelu, &data, &common::tiny_config(2)).unwrap();
        assert_eq!(run.base_hash, before);
        assert_eq!(run.base.param_hash(), before);
        assert_eq!(run.meta.in_dim(), input.dim(32));
    }
}

struct Constant(usize);

impl Classifier for Constant {
    fn name(&self) -> String {
        "constant".into()
    }

    fn logits(&mut self, maps: &[&DopplerTimeMap]) -> Result<Vec<[f64; NUM_CLASSES]>> {
        let mut row = [0.0; NUM_CLASSES];
        row[self.0] = 1.0;
        Ok(vec![row; maps.len()])
    }
}

fn balanced(per_class: usize) -> Vec<LabeledSample> {
    let cfg = PhaseOnlyConfig { samples_per_class: per_class, ..PhaseOnlyConfig::default() };
    phase_only_generate(&cfg).unwrap()
}

#[test]
fn constant_predictor_scores_one_sixth_on_a_balanced_set() {
    let samples = balanced(3);
    let refs: Vec<_> = samples.iter().collect();
    for c in 0..NUM_CLASSES {
        let r = evaluate_clean_and_noisy(&mut Constant(c), &refs, 9).unwrap();
        assert!((r.accuracy_clean - 1.0 / 6.0).abs() < 1e-12);
        assert!((r.accuracy_noisy - 1.0 / 6.0).abs() < 1e-12);
    }
}

#[test]
fn infinite_snr_reproduces_clean_evaluation() {
    let data = phase_only_set(4, 4);
    let run = train_single::<f32>(ReprFormat::Magnitude, &data, &common::tiny_config(1)).unwrap();
    let mut model = run.selected(ModelSelection::Final);
    let test = data.subset(Subset::Test);
    let clean = evaluate(&mut model, &test, None).unwrap();
    let inf = evaluate(&mut model, &test, Some(NoiseSpec { snr_db: f64::INFINITY, seed: 5 })).unwrap();
    assert_eq!(clean, inf);
}

#[test]
fn reported_accuracy_matches_a_recount_of_records() {
    let data = phase_only_set(4, 5);
    let run = train_single::<f32>(ReprFormat::Real, &data, &common::tiny_config(1)).unwrap();
    let mut model = run.selected(ModelSelection::Final);
    let test = data.subset(Subset::Test);
    let r = evaluate_clean_and_noisy(&mut model, &test, 6).unwrap();
    let recount = |recs: &[microdoppler::train::PredictionRecord]| {
        recs.iter().filter(|p| p.predicted == p.label).count() as f64 / recs.len() as f64
    };
    assert_eq!(r.accuracy_clean, recount(&r.clean));
    assert_eq!(r.accuracy_noisy, recount(&r.noisy));
    for (rec, s) in r.clean.iter().zip(&test) {
        assert_eq!(rec.sample_id, s.id);
        let best = (0..NUM_CLASSES).max_by(|&a, &b| rec.confidences[a].total_cmp(&rec.confidences[b])).unwrap();
        assert_eq!(best, rec.predicted);
    }
}

#[test]
fn noisy_evaluation_is_reproducible_per_sample() {
    let samples = balanced(2);
    let spec = NoiseSpec { snr_db: 0.0, seed: 11 };
    let a = spec.apply(&samples[3]).unwrap();
    let b = spec.apply(&samples[3]).unwrap();
    assert_eq!(a, b);
    let ratio = samples[3].dtm.mean_power() / {
        let d: f64 = a
            .values()
            .as_slice()
            .iter()
            .zip(samples[3].dtm.values().as_slice())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        d / (128.0 * 128.0)
    };
    assert!((10.0 * ratio.log10()).abs() < 0.1);
}
