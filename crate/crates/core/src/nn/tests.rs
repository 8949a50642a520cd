use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::autograd::{Graph, Mode, Tensor};
use crate::matrix::Matrix;
use crate::repr::ReprFormat;

fn small_spec(in_ch: usize) -> EncoderSpec {
    EncoderSpec { in_ch, widths: [2, 3, 2, 3, 2], input_size: 16, embed_dim: 4 }
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

#[test]
fn reference_spec_sizes() {
    let s = EncoderSpec::reference(1);
    assert_eq!(s.spatial_sizes(), [64, 32, 16, 8, 4]);
    assert_eq!(s.flatten_size(), 8192);
}

#[test]
fn full_encoder_embeds_to_128_for_all_channel_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for in_ch in [1usize, 2, 4, 5] {
        let mut store = crate::autograd::ParamStore::<f32>::new();
        let enc = Encoder::init(&mut store, "e", EncoderSpec::reference(in_ch), 0.01, &mut rng).unwrap();
        let mut g = Graph::new();
        let x = g.input(Tensor::full(&[1, in_ch, 128, 128], 0.1f32)).unwrap();
        let e = enc.forward(&mut g, &mut store, x, Mode::Eval, 0.01, false).unwrap();
        assert_eq!(g.value(e).shape(), &[1, 128]);
    }
}

#[test]
fn channel_mismatch_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut m = SingleDomainModel::<f64>::new(ReprFormat::Magnitude, small_spec(1), true, 0.01, &mut rng).unwrap();
    let mut g = Graph::new();
    let x = g.input(Tensor::zeros(&[1, 2, 16, 16])).unwrap();
    assert!(m.logits(&mut g, x, Mode::Eval).is_err());
    assert!(SingleDomainModel::<f64>::new(ReprFormat::Rect2, small_spec(1), true, 0.01, &mut rng).is_err());
}

#[test]
fn zero_input_embeds_to_embed_bias() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut m = SingleDomainModel::<f64>::new(ReprFormat::Magnitude, small_spec(1), true, 0.01, &mut rng).unwrap();
    let bias_id = m.store.find("encoder.embed.bias").unwrap();
    let bias = vec![0.3, -0.2, 0.7, 1.1];
    m.store.get_mut(bias_id).value.data_mut().copy_from_slice(&bias);
    let mut g = Graph::new();
    let x = g.input(Tensor::zeros(&[2, 1, 16, 16])).unwrap();
    let e = m.embed(&mut g, x, Mode::Eval, false).unwrap();
    let got = g.value(e).data();
    assert!(close(&got[..4], &bias, 1e-12) && close(&got[4..], &bias, 1e-12));
}

#[test]
fn head_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut store = crate::autograd::ParamStore::<f64>::new();
    let head = Head::init(&mut store, "h", 4, 6, true, 0.01, &mut rng).unwrap();
    let bid = head.bias_id().unwrap();
    let bias = rand_tensor(&mut rng, &[6]);
    store.get_mut(bid).value = bias.clone();

    let zero = head.apply(&store, &Tensor::zeros(&[1, 4])).unwrap();
    assert!(close(zero.data(), bias.data(), 1e-12));

    let e1 = rand_tensor(&mut rng, &[1, 4]);
    let e2 = rand_tensor(&mut rng, &[1, 4]);
    let sum = Tensor::new(&[1, 4], e1.data().iter().zip(e2.data()).map(|(a, b)| a + b).collect()).unwrap();
    let l1 = head.apply(&store, &e1).unwrap();
    let l2 = head.apply(&store, &e2).unwrap();
    let ls = head.apply(&store, &sum).unwrap();
    let expect: Vec<f64> = (0..6).map(|i| l1.data()[i] + l2.data()[i] - bias.data()[i]).collect();
    assert!(close(ls.data(), &expect, 1e-9));

    assert!(head.apply(&store, &Tensor::zeros(&[1, 5])).is_err());
}

#[test]
fn bias_free_head_preserves_argmax_under_positive_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut store = crate::autograd::ParamStore::<f64>::new();
    let head = Head::init(&mut store, "h", 4, 6, false, 0.01, &mut rng).unwrap();
    assert!(!head.has_bias());
    let argmax = |t: &Tensor<f64>| {
        t.data().iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0
    };
    for _ in 0..50 {
        let e = rand_tensor(&mut rng, &[1, 4]);
        let s = rng.random_range(0.01..100.0);
        let scaled = Tensor::new(&[1, 4], e.data().iter().map(|v| v * s).collect()).unwrap();
        assert_eq!(argmax(&head.apply(&store, &e).unwrap()), argmax(&head.apply(&store, &scaled).unwrap()));
    }
}

#[test]
fn domain_pairs_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let draws = 100_000;
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..draws {
        let s = sample_domains(&mut rng, 2, 5).unwrap();
        assert!(s[0] < s[1] && s[1] < 5);
        *counts.entry((s[0], s[1])).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 10);
    let p: f64 = 0.1;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for (&pair, &c) in &counts {
        assert!((c as f64 - draws as f64 * p).abs() <= 3.0 * sigma, "{pair:?}: {c}");
    }
}

#[test]
fn domain_sampling_edge_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    assert_eq!(sample_domains(&mut rng, 5, 5).unwrap(), vec![0, 1, 2, 3, 4]);
    assert!(sample_domains(&mut rng, 6, 5).is_err());
    let seq = |seed| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..20).map(|_| sample_domains(&mut r, 2, 5).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(seq(11), seq(11));
}

struct MultiFixture {
    model: MultiDomainModel<f64>,
    inputs: Vec<(Domain, Tensor<f64>)>,
}

fn multi_fixture(seed: u64) -> MultiFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = MultiDomainModel::<f64>::new(small_spec(1), true, 0.01, &mut rng).unwrap();
    let bid = model.head.bias_id().unwrap();
    model.store.get_mut(bid).value = rand_tensor(&mut rng, &[6]);
    let inputs = DOMAINS.iter().map(|&d| (d, rand_tensor(&mut rng, &[2, 1, 16, 16]))).collect();
    MultiFixture { model, inputs }
}

fn multi_logits(f: &mut MultiFixture, active: &[Domain]) -> Vec<f64> {
    let mut g = Graph::new();
    let vars: Vec<_> = f.inputs.iter().map(|(d, t)| (*d, g.input(t.clone()).unwrap())).collect();
    let out = f.model.logits(&mut g, &vars, active, Mode::Eval).unwrap();
    g.value(out).data().to_vec()
}

fn domain_embedding(f: &mut MultiFixture, d: Domain) -> Tensor<f64> {
    let mut g = Graph::new();
    let x = g.input(f.inputs[domain_index(d)].1.clone()).unwrap();
    let enc = f.model.encoder(d).clone();
    let e = enc.forward(&mut g, &mut f.model.store, x, Mode::Eval, 0.01, false).unwrap();
    g.value(e).clone()
}

#[test]
fn singleton_multi_forward_matches_encoder_then_head() {
    let mut f = multi_fixture(8);
    let d = ChannelKind::Magnitude;
    let logits = multi_logits(&mut f, &[d]);
    let e = domain_embedding(&mut f, d);
    let manual = f.model.head.apply(&f.model.store, &e).unwrap();
    assert_eq!(logits, manual.data());
}

#[test]
fn pair_forward_matches_manual_embedding_sum() {
    let mut f = multi_fixture(9);
    let pair = [ChannelKind::Magnitude, ChannelKind::PhaseUnwrapped];
    let logits = multi_logits(&mut f, &pair);
    let a = domain_embedding(&mut f, pair[0]);
    let b = domain_embedding(&mut f, pair[1]);
    let sum = Tensor::new(a.shape(), a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect()).unwrap();
    let manual = f.model.head.apply(&f.model.store, &sum).unwrap();
    assert!(close(&logits, manual.data(), 1e-9));
}

#[test]
fn all_domains_decompose_over_disjoint_subsets() {
    let mut f = multi_fixture(10);
    let all = multi_logits(&mut f, &DOMAINS);
    let first = multi_logits(&mut f, &DOMAINS[..2]);
    let second = multi_logits(&mut f, &DOMAINS[2..]);
    let bias = f.model.store.value(f.model.head.bias_id().unwrap()).data().to_vec();
    let expect: Vec<f64> = (0..all.len()).map(|i| first[i] + second[i] - bias[i % 6]).collect();
    assert!(close(&all, &expect, 1e-9));
}

#[test]
fn inactive_encoders_receive_no_gradient() {
    let mut f = multi_fixture(11);
    let active = [ChannelKind::Real, ChannelKind::Imag];
    let mut g = Graph::new();
    let vars: Vec<_> = f.inputs.iter().map(|(d, t)| (*d, g.input(t.clone()).unwrap())).collect();
    let logits = f.model.logits(&mut g, &vars, &active, Mode::Train).unwrap();
    let loss = g.softmax_cross_entropy(logits, &[1, 4]).unwrap();
    g.backward(loss).unwrap();
    f.model.store.zero_grads();
    g.write_grads(&mut f.model.store);
    for &d in &DOMAINS {
        let touched = f
            .model
            .encoder(d)
            .trainable()
            .iter()
            .any(|&id| f.model.store.get(id).grad.as_ref().is_some_and(|t| t.data().iter().any(|&v| v != 0.0)));
        assert_eq!(touched, active.contains(&d), "{d:?}");
    }
}

#[test]
fn empty_or_missing_domains_are_rejected() {
    let mut f = multi_fixture(12);
    let mut g = Graph::new();
    let vars: Vec<_> = f.inputs[..1].iter().map(|(d, t)| (*d, g.input(t.clone()).unwrap())).collect();
    assert!(f.model.logits(&mut g, &vars, &[], Mode::Eval).is_err());
    assert!(f.model.logits(&mut g, &vars, &[ChannelKind::Imag], Mode::Eval).is_err());
}

#[test]
fn linear_meta_module_is_one_affine_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut meta = MetaModule::<f64>::new(MetaInput::Confidences, MetaActivation::Linear, 128, 0.01, &mut rng).unwrap();
    assert_eq!(meta.in_dim(), 30);
    for id in meta.trainable() {
        let shape = meta.store.value(id).shape().to_vec();
        if shape.len() == 1 {
            meta.store.get_mut(id).value = rand_tensor(&mut rng, &shape);
        }
    }
    // Compose W = W0·W1·W2 and c = (b0·W1 + b1)·W2 + b2 directly.
    let layers: Vec<(Vec<f64>, Vec<usize>, Vec<f64>)> = meta
        .layers()
        .iter()
        .map(|(w, b)| (w.data().to_vec(), w.shape().to_vec(), b.data().to_vec()))
        .collect();
    let apply_layer = |x: &[f64], (w, s, b): &(Vec<f64>, Vec<usize>, Vec<f64>), with_bias: bool| -> Vec<f64> {
        (0..s[1])
            .map(|j| (0..s[0]).map(|i| x[i] * w[i * s[1] + j]).sum::<f64>() + if with_bias { b[j] } else { 0.0 })
            .collect()
    };
    let mut bias_path = vec![0.0; 30];
    for l in &layers {
        bias_path = apply_layer(&bias_path, l, true);
    }
    let zero_out = meta.apply(&Tensor::zeros(&[1, 30])).unwrap();
    assert!(close(zero_out.data(), &bias_path, 1e-9));

    let x1 = rand_tensor(&mut rng, &[1, 30]);
    let x2 = rand_tensor(&mut rng, &[1, 30]);
    let mut lin = x1.data().to_vec();
    for l in &layers {
        lin = apply_layer(&lin, l, false);
    }
    let expect: Vec<f64> = lin.iter().zip(&bias_path).map(|(a, b)| a + b).collect();
    assert!(close(meta.apply(&x1).unwrap().data(), &expect, 1e-9));

    // Superposition of an affine map: f(a+b) = f(a) + f(b) − f(0).
    let xs = Tensor::new(&[1, 30], x1.data().iter().zip(x2.data()).map(|(a, b)| a + b).collect()).unwrap();
    let (f1, f2, fs) = (meta.apply(&x1).unwrap(), meta.apply(&x2).unwrap(), meta.apply(&xs).unwrap());
    let sup: Vec<f64> = (0..6).map(|i| f1.data()[i] + f2.data()[i] - zero_out.data()[i]).collect();
    assert!(close(fs.data(), &sup, 1e-9));

    assert!(meta.apply(&Tensor::zeros(&[1, 31])).is_err());
    let emb = MetaModule::<f64>::new(MetaInput::Embeddings, MetaActivation::LeakyRelu, 128, 0.01, &mut rng).unwrap();
    assert_eq!(emb.in_dim(), 640);
}

#[test]
fn dead_network_has_zero_saliency() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut m = SingleDomainModel::<f64>::new(ReprFormat::Rect2, small_spec(2), true, 0.01, &mut rng).unwrap();
    let ids: Vec<_> = m.store.iter().filter(|(_, p)| p.name.ends_with("conv.weight")).map(|(id, _)| id).collect();
    for id in ids {
        m.store.get_mut(id).value.data_mut().fill(0.0);
    }
    let x = rand_tensor(&mut rng, &[2, 2, 16, 16]);
    let s = input_saliency(&mut m, &x, &[0, 5]).unwrap();
    assert!(s.data().iter().all(|&v| v == 0.0));
    assert!(input_saliency(&mut m, &x, &[0, 6]).is_err());
}

#[test]
fn saliency_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut m = SingleDomainModel::<f64>::new(ReprFormat::Rect2, small_spec(2), true, 0.01, &mut rng).unwrap();
    let x = rand_tensor(&mut rng, &[1, 2, 16, 16]);
    let class = 3;
    let sal = input_saliency(&mut m, &x, &[class]).unwrap();
    let mut logit = |t: &Tensor<f64>| {
        let mut g = Graph::new();
        let v = g.input(t.clone()).unwrap();
        let l = m.logits(&mut g, v, Mode::Eval).unwrap();
        g.value(l).data()[class]
    };
    let h = 1e-6;
    for _ in 0..20 {
        let i = rng.random_range(0..x.numel());
        let mut xp = x.clone();
        xp.data_mut()[i] += h;
        let mut xm = x.clone();
        xm.data_mut()[i] -= h;
        let fd = ((logit(&xp) - logit(&xm)) / (2.0 * h)).abs();
        let peak = sal.data().iter().copied().fold(0.0, f64::max);
        assert!((fd - sal.data()[i]).abs() <= 1e-3 * sal.data()[i].max(1e-3 * peak), "{fd} vs {}", sal.data()[i]);
    }
}

#[test]
fn threshold_semantics() {
    let m = Matrix::from_vec(1, 3, vec![0.1, 0.2, 1.0]);
    assert_eq!(threshold_map(&m, SALIENCY_THRESHOLD).as_slice(), &[0.0, 0.0, 1.0]);
    let u = Matrix::from_vec(2, 2, vec![0.4; 4]);
    assert_eq!(threshold_map(&u, SALIENCY_THRESHOLD).as_slice(), u.as_slice());
}

#[test]
fn pgm_is_max_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.pgm");
    write_pgm(&Matrix::from_vec(2, 3, vec![0.0, 0.5, 1.0, 2.0, 0.25, 1.5]), &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let header = b"P5\n3 2\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    assert_eq!(&bytes[header.len()..], &[0, 64, 128, 255, 32, 191]);
}
