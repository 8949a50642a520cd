//! Independent reference implementations shared by the integration tests
//! and the acceptance target.

#![allow(dead_code)]

use std::f64::consts::PI;

use microdoppler::analysis::RecordSet;
use microdoppler::autograd::{Graph, ParamId, ParamStore, Real, Tensor, Var};
use microdoppler::dsp::CMatrix;
use microdoppler::train::TrainConfig;
use microdoppler::Result;
use num_complex::Complex64 as C;
use rand::Rng;

/// `X[k] = Σ_n x[n]·e^{−2πikn/N}`, evaluated term by term.
pub fn naive_dft(x: &[C]) -> Vec<C> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(m, v)| v * C::from_polar(1.0, -2.0 * PI * ((k * m) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

pub fn blackman(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / (n - 1) as f64;
            0.42 - 0.5 * t.cos() + 0.08 * (2.0 * t).cos()
        })
        .collect()
}

/// Windowed DFT of every frame, zero-padded to `nfft`, with frequency `k`
/// stored at row `(k + nfft/2) mod nfft`.
pub fn naive_stft(x: &[C], win: usize, hop: usize, nfft: usize) -> CMatrix {
    let w = blackman(win);
    let frames = (x.len() - win) / hop + 1;
    let mut out = CMatrix::zeros(nfft, frames);
    for f in 0..frames {
        let mut buf = vec![C::new(0.0, 0.0); nfft];
        for m in 0..win {
            buf[m] = x[f * hop + m] * w[m];
        }
        for (k, v) in naive_dft(&buf).into_iter().enumerate() {
            out[((k + nfft / 2) % nfft, f)] = v;
        }
    }
    out
}

/// Bilinear interpolation written as a sum of separable tent kernels over
/// every source pixel, with corner-aligned sample positions.
pub fn tent_resample(m: &CMatrix, rows: usize, cols: usize) -> CMatrix {
    let (sr, sc) = m.shape();
    let tent = |d: f64| (1.0 - d.abs()).max(0.0);
    CMatrix::from_fn(rows, cols, |i, j| {
        let y = i as f64 * (sr - 1) as f64 / (rows - 1) as f64;
        let x = j as f64 * (sc - 1) as f64 / (cols - 1) as f64;
        let mut acc = C::new(0.0, 0.0);
        for r in 0..sr {
            let wy = tent(y - r as f64);
            if wy == 0.0 {
                continue;
            }
            for c in 0..sc {
                acc += m[(r, c)] * (wy * tent(x - c as f64));
            }
        }
        acc
    })
}

/// `max |a − b| / max |b|`, the relative error used by the DSP oracles.
pub fn rel_err(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let scale = b.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale
}

pub fn random_signal<R: Rng>(rng: &mut R, n: usize) -> Vec<C> {
    (0..n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

pub fn random_cmatrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_vec(rows, cols, random_signal(rng, rows * cols))
}

/// Worst relative error of each DSP oracle over `cases` randomized cases:
/// (stft, range_profile, resample, unwrap).
pub fn dsp_oracle_errors(cases: usize, seed: u64) -> Result<[f64; 4]> {
    use microdoppler::dsp::{
        range_profile, resample_grid, stft, unwrap_phase_time, wrap_phase, ComplexSignal, StftConfig,
    };
    use microdoppler::Matrix;
    let mut rng = microdoppler::seed::rng_for(seed, "dsp-oracles");
    let mut worst = [0.0f64; 4];
    for _ in 0..cases {
        let win = rng.random_range(2..=64usize);
        let hop = rng.random_range(1..=win);
        let nfft = win.next_power_of_two() << rng.random_range(0..=1u32);
        let len = rng.random_range(win..=win + 200);
        let x = random_signal(&mut rng, len);
        let got = stft(&ComplexSignal::new(x.clone(), 100.0)?, &StftConfig::new(win, hop, nfft)?)?;
        worst[0] = worst[0].max(rel_err(&got, &naive_stft(&x, win, hop, nfft)));

        let (fast, slow) = (rng.random_range(2..=40usize), rng.random_range(1..=6usize));
        let raw = random_cmatrix(&mut rng, fast, slow);
        let rt = range_profile(&raw, 10.0)?;
        let mut expect = CMatrix::zeros(fast, slow);
        for t in 0..slow {
            let col: Vec<C> = (0..fast).map(|r| raw[(r, t)]).collect();
            for (r, v) in naive_dft(&col).into_iter().enumerate() {
                expect[(r, t)] = v;
            }
        }
        worst[1] = worst[1].max(rel_err(&rt.bins, &expect));

        let (sr, sc) = (rng.random_range(2..=40usize), rng.random_range(2..=40usize));
        let (dr, dc) = (rng.random_range(2..=70usize), rng.random_range(2..=70usize));
        let m = random_cmatrix(&mut rng, sr, sc);
        worst[2] = worst[2].max(rel_err(&resample_grid(&m, dr, dc)?, &tent_resample(&m, dr, dc)));

        // a phase track with steps below π survives wrap → unwrap up to the
        // initial offset
        let (rows, cols) = (rng.random_range(1..=4usize), rng.random_range(2..=128usize));
        let mut truth = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let mut p = rng.random_range(-50.0..50.0);
            for _ in 0..cols {
                truth.push(p);
                p += rng.random_range(-0.99 * PI..0.99 * PI);
            }
        }
        let wrapped = Matrix::from_vec(rows, cols, truth.iter().map(|&v| wrap_phase(v)).collect());
        let un = unwrap_phase_time(&wrapped)?;
        let scale = truth.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..rows {
            let offset = truth[r * cols] - wrapped[(r, 0)];
            for c in 0..cols {
                let e = (un[(r, c)] + offset - truth[r * cols + c]).abs() / scale;
                worst[3] = worst[3].max(e);
            }
        }
    }
    Ok(worst)
}

/// Random prediction fixture: `n` samples, `k` representations, each right
/// with its own probability.
pub fn random_record_set<R: Rng>(rng: &mut R, n: usize, k: usize) -> RecordSet {
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..6)).collect();
    let names = ["real", "imag", "magnitude", "phase-w", "phase-u"];
    let predictions = (0..k)
        .map(|_| {
            let p_right = rng.random_range(0.0..1.0);
            labels
                .iter()
                .map(|&l| if rng.random_bool(p_right) { l } else { rng.random_range(0..6) })
                .collect()
        })
        .collect();
    RecordSet::from_predictions(names[..k].iter().map(|s| s.to_string()).collect(), labels, predictions).unwrap()
}

/// Analysis quantities by enumeration: a (label, pred_r, pred_q) histogram
/// for agreement and a correctness-pattern histogram for the counts.
pub struct Enumerated {
    pub same_label: Vec<Vec<Option<f64>>>,
    pub both_wrong: Vec<Vec<Option<f64>>>,
    pub unique: Vec<usize>,
    pub upper: usize,
    /// Per base representation: samples the base gets wrong that exactly one
    /// other representation gets right.
    pub recoverable: Vec<usize>,
    pub accuracy: Vec<f64>,
}

pub fn enumerate(set: &RecordSet) -> Enumerated {
    let k = set.representations.len();
    let n = set.labels.len();
    let mut same_label = vec![vec![None; k]; k];
    let mut both_wrong = vec![vec![None; k]; k];
    for r in 0..k {
        for q in 0..k {
            let mut hist = [[[0usize; 6]; 6]; 6];
            for i in 0..n {
                hist[set.labels[i]][set.predictions[r][i]][set.predictions[q][i]] += 1;
            }
            let (mut errors, mut same, mut both) = (0, 0, 0);
            for (l, plane) in hist.iter().enumerate() {
                for (pr, row) in plane.iter().enumerate() {
                    for (pq, &count) in row.iter().enumerate() {
                        if pr != l {
                            errors += count;
                            if pq == pr {
                                same += count;
                            }
                            if pq != l {
                                both += count;
                            }
                        }
                    }
                }
            }
            if errors > 0 {
                same_label[r][q] = Some(same as f64 / errors as f64);
                both_wrong[r][q] = Some(both as f64 / errors as f64);
            }
        }
    }
    let mut patterns = vec![0usize; 1 << k];
    for i in 0..n {
        let mask = (0..k).fold(0usize, |m, r| m | (usize::from(set.predictions[r][i] == set.labels[i]) << r));
        patterns[mask] += 1;
    }
    let mut unique = vec![0; k];
    let mut recoverable = vec![0; k];
    let mut correct = vec![0; k];
    let mut upper = 0;
    for (mask, &count) in patterns.iter().enumerate() {
        if mask != 0 {
            upper += count;
        }
        for r in 0..k {
            if mask & (1 << r) != 0 {
                correct[r] += count;
            }
        }
        if mask.count_ones() == 1 {
            unique[mask.trailing_zeros() as usize] += count;
            for (b, rec) in recoverable.iter_mut().enumerate() {
                if mask & (1 << b) == 0 {
                    *rec += count;
                }
            }
        }
    }
    let accuracy = correct.iter().map(|&c| c as f64 / n as f64).collect();
    Enumerated { same_label, both_wrong, unique, upper, recoverable, accuracy }
}

/// Largest deviation between the analysis tables and `enumerate` over
/// `fixtures` random record sets of up to 50 samples and 5 representations.
pub fn analysis_oracle_error(fixtures: usize, seed: u64) -> f64 {
    use microdoppler::analysis::{
        error_agreement_matrix, oracle_upper_bound, potential_margin, unique_correct_counts, AgreementMode,
    };
    let mut rng = microdoppler::seed::rng_for(seed, "analysis-oracles");
    let cell = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(x), Some(y)) => (x - y).abs(),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    let mut worst = 0.0f64;
    for _ in 0..fixtures {
        let n = rng.random_range(1..=50);
        let set = random_record_set(&mut rng, n, 5);
        let e = enumerate(&set);
        for (mode, want) in [(AgreementMode::SameLabel, &e.same_label), (AgreementMode::BothWrong, &e.both_wrong)] {
            let t = error_agreement_matrix(&set, mode);
            for r in 0..5 {
                for q in 0..5 {
                    worst = worst.max(cell(t.matrix[r][q], want[r][q]));
                }
            }
        }
        let u = unique_correct_counts(&set);
        if u.counts != e.unique || u.total != e.unique.iter().sum::<usize>() {
            return f64::INFINITY;
        }
        let b = oracle_upper_bound(&set);
        if b.correct_any != e.upper {
            return f64::INFINITY;
        }
        worst = worst.max((b.fraction - e.upper as f64 / n as f64).abs());
        for (r, name) in set.representations.iter().enumerate() {
            let m = potential_margin(&set, name).unwrap();
            if m.recoverable != e.recoverable[r] {
                return f64::INFINITY;
            }
            let want = e.accuracy[r] + e.recoverable[r] as f64 / n as f64;
            worst = worst.max((m.potential - want).abs());
        }
    }
    worst
}

/// Published cells recomputed from their integer counts:
/// (margin, upper bound).
pub fn published_arithmetic() -> (f64, f64) {
    use microdoppler::analysis::reference as r;
    (
        r::MARGIN_BASE_ACCURACY + r::MARGIN_RECOVERABLE as f64 / r::TEST_SAMPLES as f64,
        r::UPPER_BOUND_CORRECT as f64 / r::TEST_SAMPLES as f64,
    )
}

/// Input entries probed per input tensor; larger inputs are strided.
const INPUT_PROBES: usize = 256;

/// Largest relative finite-difference error over every value of the
/// parameters `ids` and every entry of `inputs`, for the scalar loss built
/// by `loss` on `model`.
pub fn grad_check<M>(
    model: &mut M,
    store_of: fn(&mut M) -> &mut ParamStore<f64>,
    ids: &[ParamId],
    inputs: &mut [(Vec<usize>, Vec<f64>)],
    loss: &mut dyn FnMut(&mut Graph<f64>, &mut M, &[Var]) -> Result<Var>,
) -> Result<f64> {
    use microdoppler::autograd::check::max_relative_error;
    let h = 1e-6;
    let mut eval = |model: &mut M, inputs: &[(Vec<usize>, Vec<f64>)], grads: bool| -> Result<(f64, Vec<Vec<f64>>)> {
        let mut g = Graph::new();
        let vars = inputs
            .iter()
            .map(|(s, v)| g.leaf(Tensor::new(s, v.clone())?, grads))
            .collect::<Result<Vec<_>>>()?;
        let l = loss(&mut g, model, &vars)?;
        let value = g.value(l).item();
        if !grads {
            return Ok((value, vec![]));
        }
        g.backward(l)?;
        g.write_grads(store_of(model));
        let in_grads = vars
            .iter()
            .zip(inputs)
            .map(|(&v, (_, x))| g.grad(v).map(|t| t.to_f64_vec()).unwrap_or_else(|| vec![0.0; x.len()]))
            .collect();
        Ok((value, in_grads))
    };
    store_of(model).zero_grads();
    let (_, in_grads) = eval(model, inputs, true)?;
    // all analytic/numeric pairs are pooled so the round-off floor follows
    // the largest gradient of the whole model; a parameter whose true
    // gradient is identically zero (a bias ahead of batch norm) then
    // compares against that scale rather than its own round-off
    let (mut analytic, mut numeric) = (Vec::new(), Vec::new());
    for &id in ids {
        let store = store_of(model);
        let n = store.value(id).numel();
        analytic.extend(store.get(id).grad.as_ref().map(|t| t.to_f64_vec()).unwrap_or_else(|| vec![0.0; n]));
        for j in 0..n {
            let orig = store_of(model).value(id).data()[j];
            store_of(model).get_mut(id).value.data_mut()[j] = orig + h;
            let plus = eval(model, inputs, false)?.0;
            store_of(model).get_mut(id).value.data_mut()[j] = orig - h;
            let minus = eval(model, inputs, false)?.0;
            store_of(model).get_mut(id).value.data_mut()[j] = orig;
            numeric.push((plus - minus) / (2.0 * h));
        }
    }
    for k in 0..inputs.len() {
        let len = inputs[k].1.len();
        let probes: Vec<usize> = if len <= INPUT_PROBES { (0..len).collect() } else { (0..INPUT_PROBES).map(|p| p * len / INPUT_PROBES).collect() };
        for j in probes {
            let orig = inputs[k].1[j];
            inputs[k].1[j] = orig + h;
            let plus = eval(model, inputs, false)?.0;
            inputs[k].1[j] = orig - h;
            let minus = eval(model, inputs, false)?.0;
            inputs[k].1[j] = orig;
            analytic.push(in_grads[k][j]);
            numeric.push((plus - minus) / (2.0 * h));
        }
    }
    Ok(max_relative_error(&analytic, &numeric))
}

fn rand_input<R: Rng>(rng: &mut R, shape: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let n = shape.iter().product();
    (shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// Projects any tensor to a scalar through fixed random weights so every
/// output entry carries a distinct upstream gradient.
fn project(g: &mut Graph<f64>, x: Var, seed: u64) -> Result<Var> {
    let n = g.value(x).numel();
    let mut rng = microdoppler::seed::rng_for(seed, "projection");
    let w = g.input(Tensor::new(&[n, 1], (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())?)?;
    let flat = g.reshape(x, &[1, n])?;
    let y = g.linear(flat, w, None)?;
    g.sum(y)
}

fn id(s: &mut ParamStore<f64>) -> &mut ParamStore<f64> {
    s
}

/// Finite-difference errors of every graph op and of the composite models
/// on randomized small shapes, 64-bit.
pub fn gradient_errors(seed: u64) -> Result<Vec<(String, f64)>> {
    use microdoppler::autograd::Mode;
    use microdoppler::nn::{
        EncoderSpec, MetaActivation, MetaInput, MetaModule, MultiDomainModel, SingleDomainModel, DOMAINS,
    };
    use microdoppler::repr::ReprFormat;
    let mut rng = microdoppler::seed::rng_for(seed, "gradients");
    let mut out = Vec::new();
    let mut none = ParamStore::<f64>::new();

    let (n, c) = (rng.random_range(2..=3usize), rng.random_range(1..=3usize));
    let (k, hw) = (rng.random_range(1..=3usize), rng.random_range(3..=6usize));
    let stride = rng.random_range(1..=2usize);
    let mut ins = vec![rand_input(&mut rng, &[n, c, hw, hw]), rand_input(&mut rng, &[k, c, 3, 3]), rand_input(&mut rng, &[k])];
    let e = grad_check(&mut none, id, &[], &mut ins, &mut |g, _, v| {
        let y = g.conv2d(v[0], v[1], v[2], stride, 1)?;
        project(g, y, 1)
    })?;
    out.push(("conv2d".into(), e));

    for (name, mode) in [("batchnorm2d/train", Mode::Train), ("batchnorm2d/eval", Mode::Eval)] {
        let mut ins = vec![rand_input(&mut rng, &[3, 2, 3, 3]), rand_input(&mut rng, &[2]), rand_input(&mut rng, &[2])];
        let mut rm = vec![0.1, -0.2];
        let mut rv = vec![0.8, 1.3];
        let e = grad_check(&mut none, id, &[], &mut ins, &mut |g, _, v| {
            let y = g.batchnorm2d(v[0], v[1], v[2], &mut rm.clone(), &mut rv.clone(), mode)?;
            project(g, y, 2)
        })?;
        rm.clear();
        rv.clear();
        out.push((name.into(), e));
    }

    let mut ins = vec![rand_input(&mut rng, &[4, 5])];
    let e = grad_check(&mut none, id, &[], &mut ins, &mut |g, _, v| {
        let y = g.leaky_relu(v[0], 0.1)?;
        project(g, y, 3)
    })?;
    out.push(("leaky_relu".into(), e));

    let mut ins = vec![rand_input(&mut rng, &[3, 4]), rand_input(&mut rng, &[4, 5]), rand_input(&mut rng, &[5])];
    let e = grad_check(&mut none, id, &[], &mut ins, &mut |g, _, v| {
        let y = g.linear(v[0], v[1], Some(v[2]))?;
        project(g, y, 4)
    })?;
    out.push(("linear".into(), e));

    let mut ins = vec![rand_input(&mut rng, &[2, 6]), rand_input(&mut rng, &[2, 6])];
    let e = grad_check(&mut none, id, &[], &mut ins, &mut |g, _, v| {
        let y = g.add(v[0], v[1])?;
        let y = g.reshape(y, &[3, 4])?;
        project(g, y, 5)
    })?;
    out.push(("add+reshape".into(), e));

    let mut ins = vec![rand_input(&mut rng, &[3, 4])];
    let e = grad_check(&mut none, id, &[], &mut ins, &mut |g, _, v| g.sum(v[0]))?;
    out.push(("sum".into(), e));

    let mut ins = vec![rand_input(&mut rng, &[4, 6])];
    let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..6)).collect();
    let e = grad_check(&mut none, id, &[], &mut ins, &mut |g, _, v| g.softmax_cross_entropy(v[0], &labels))?;
    out.push(("softmax_cross_entropy".into(), e));

    let mut ins = vec![rand_input(&mut rng, &[4, 6])];
    let e = grad_check(&mut none, id, &[], &mut ins, &mut |g, _, v| g.pick_sum(v[0], &labels))?;
    out.push(("pick_sum".into(), e));

    let spec = EncoderSpec { in_ch: 2, widths: [2, 3, 2, 3, 2], input_size: 32, embed_dim: 4 };
    let mut single = SingleDomainModel::<f64>::new(ReprFormat::Polar2U, spec, true, 0.01, &mut rng)?;
    let ids = single.trainable();
    let mut ins = vec![rand_input(&mut rng, &[3, 2, 32, 32])];
    let labels3: Vec<usize> = (0..3).map(|_| rng.random_range(0..6)).collect();
    let e = grad_check(&mut single, |m| &mut m.store, &ids, &mut ins, &mut |g, m, v| {
        let l = m.logits(g, v[0], Mode::Train)?;
        g.softmax_cross_entropy(l, &labels3)
    })?;
    out.push(("encoder (5 blocks) + head".into(), e));

    let mut multi = MultiDomainModel::<f64>::new(EncoderSpec { in_ch: 1, ..spec }, true, 0.01, &mut rng)?;
    let picks = microdoppler::nn::sample_domains(&mut rng, 2, 5)?;
    let active: Vec<_> = picks.iter().map(|&i| DOMAINS[i]).collect();
    let ids = multi.trainable(&active);
    let mut ins: Vec<_> = active.iter().map(|_| rand_input(&mut rng, &[3, 1, 32, 32])).collect();
    let e = grad_check(&mut multi, |m| &mut m.store, &ids, &mut ins, &mut |g, m, v| {
        let inputs: Vec<_> = active.iter().copied().zip(v.iter().copied()).collect();
        let l = m.logits(g, &inputs, &active, Mode::Train)?;
        g.softmax_cross_entropy(l, &labels3)
    })?;
    out.push(("multi-domain forward".into(), e));

    for input in [MetaInput::Embeddings, MetaInput::Confidences] {
        for act in [MetaActivation::Linear, MetaActivation::LeakyRelu] {
            let mut meta = MetaModule::<f64>::new(input, act, 3, 0.01, &mut rng)?;
            let ids = meta.trainable();
            let mut ins = vec![rand_input(&mut rng, &[3, input.dim(3)])];
            let e = grad_check(&mut meta, |m| &mut m.store, &ids, &mut ins, &mut |g, m, v| {
                let l = m.forward(g, v[0])?;
                g.softmax_cross_entropy(l, &labels3)
            })?;
            out.push((format!("meta {}/{}", input.name(), act.name()), e));
        }
    }
    Ok(out)
}

/// Small network settings for fast training tests.
pub fn tiny_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 16,
        lr: 1e-3,
        widths: [4, 8, 8, 16, 16],
        embed_dim: 32,
        ..TrainConfig::default()
    }
}

pub fn as_real<F: Real>(v: &[f64]) -> Vec<F> {
    v.iter().map(|&x| F::from_f64_lossy(x)).collect()
}

/// Observed sizes of the reference network for one input channel count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArchShape {
    pub in_ch: usize,
    pub flatten: usize,
    pub embed: usize,
    pub logits: usize,
}

/// Runs one 128×128 sample through the reference-width model for every
/// channel count and reads the flatten size off the embedding weight.
pub fn architecture_shapes() -> Result<Vec<ArchShape>> {
    use microdoppler::autograd::Mode;
    use microdoppler::nn::{EncoderSpec, SingleDomainModel};
    use microdoppler::repr::ReprFormat;
    let mut rng = microdoppler::seed::rng_for(0, "architecture");
    let mut out = Vec::new();
    for format in [ReprFormat::Magnitude, ReprFormat::Polar2U, ReprFormat::PolRect4U, ReprFormat::PolRect5] {
        let in_ch = format.channels();
        let mut m = SingleDomainModel::<f32>::new(format, EncoderSpec::reference(in_ch), true, 0.01, &mut rng)?;
        let w = m.store.find("encoder.embed.weight").expect("embedding weight");
        let flatten = m.store.value(w).shape()[0];
        let (shape, data) = rand_input(&mut rng, &[1, in_ch, 128, 128]);
        let mut g = Graph::<f32>::new();
        let x = g.input(Tensor::new(&shape, as_real(&data))?)?;
        let e = m.embed(&mut g, x, Mode::Eval, false)?;
        let embed = g.value(e).shape()[1];
        let l = m.head.forward(&mut g, &m.store, e, false)?;
        let logits = g.value(l).shape()[1];
        out.push(ArchShape { in_ch, flatten, embed, logits });
    }
    Ok(out)
}

/// Largest deviation of each unordered pair's frequency from 1/10, in units
/// of its binomial standard deviation, over `draws` two-of-five draws.
pub fn pair_frequency_zscore(draws: usize, seed: u64) -> Result<f64> {
    use microdoppler::nn::sample_domains;
    let mut rng = microdoppler::seed::rng_for(seed, "domain-pairs");
    let mut counts = [[0usize; 5]; 5];
    for _ in 0..draws {
        let s = sample_domains(&mut rng, 2, 5)?;
        counts[s[0]][s[1]] += 1;
    }
    let n = draws as f64;
    let sigma = (n * 0.1 * 0.9).sqrt();
    let mut worst = 0.0f64;
    for a in 0..5 {
        for b in 0..5 {
            let c = counts[a][b] as f64;
            if a < b {
                worst = worst.max((c - 0.1 * n).abs() / sigma);
            } else if c != 0.0 {
                return Ok(f64::INFINITY);
            }
        }
    }
    Ok(worst)
}

fn small_multi(seed: u64) -> Result<microdoppler::nn::MultiDomainModel<f64>> {
    use microdoppler::nn::{EncoderSpec, MultiDomainModel};
    let mut rng = microdoppler::seed::rng_for(seed, "multi-fixture");
    let spec = EncoderSpec { in_ch: 1, widths: [2, 3, 2, 3, 2], input_size: 128, embed_dim: 4 };
    let mut m = MultiDomainModel::<f64>::new(spec, true, 0.01, &mut rng)?;
    let b = m.head.bias_id().expect("head bias");
    let (_, bias) = rand_input(&mut rng, &[6]);
    m.store.get_mut(b).value = Tensor::new(&[6], bias)?;
    Ok(m)
}

pub fn random_maps(n: usize, seed: u64) -> Result<Vec<microdoppler::dsp::DopplerTimeMap>> {
    use microdoppler::dsp::DopplerTimeMap;
    let mut rng = microdoppler::seed::rng_for(seed, "random-maps");
    (0..n).map(|_| DopplerTimeMap::new(random_cmatrix(&mut rng, 128, 128), 1.28, 640.0)).collect()
}

/// One Adam training step on every pair of domains. Returns, per pair,
/// whether all parameters of the three inactive encoders (running
/// statistics included) kept their exact bits while the active ones moved.
pub fn inactive_encoders_untouched(seed: u64) -> Result<bool> {
    use microdoppler::autograd::{Adam, Mode};
    use microdoppler::nn::DOMAINS;
    use microdoppler::repr::ReprFormat;
    use microdoppler::train::FeatureBank;
    let maps = random_maps(4, seed)?;
    let labels = [0usize, 3, 5, 1];
    for a in 0..5 {
        for b in a + 1..5 {
            let mut m = small_multi(seed)?;
            let before = m.store.clone();
            let active = [DOMAINS[a], DOMAINS[b]];
            let mut g = Graph::new();
            let mut inputs = Vec::new();
            for &d in &DOMAINS {
                let bank = FeatureBank::<f64>::from_maps(maps.iter(), ReprFormat::single(d))?;
                inputs.push((d, g.input(bank.batch(&[0, 1, 2, 3])?)?));
            }
            let logits = m.logits(&mut g, &inputs, &active, Mode::Train)?;
            let loss = g.softmax_cross_entropy(logits, &labels)?;
            g.backward(loss)?;
            m.store.zero_grads();
            g.write_grads(&mut m.store);
            let ids = m.trainable(&active);
            Adam::new(1e-3)?.step(&mut m.store, &ids)?;
            for (i, &d) in DOMAINS.iter().enumerate() {
                let prefix = format!("{}.", m.encoder(d).prefix());
                let same = m
                    .store
                    .iter()
                    .filter(|(_, p)| p.name.starts_with(&prefix))
                    .all(|(id, p)| {
                        let old = before.value(id).data();
                        p.value.data().iter().zip(old).all(|(x, y)| x.to_bits() == y.to_bits())
                    });
                if same == (i == a || i == b) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Compares, bit for bit, every singleton evaluation of the multi-domain
/// model with a single-domain model carrying the same encoder and head.
pub fn singleton_matches_single_path(seed: u64) -> Result<bool> {
    use microdoppler::nn::{domain_short_name, SingleDomainModel, DOMAINS};
    use microdoppler::repr::ReprFormat;
    use microdoppler::train::{Classifier, MultiView};
    let maps = random_maps(3, seed)?;
    let refs: Vec<_> = maps.iter().collect();
    let mut multi = small_multi(seed)?;
    for &d in &DOMAINS {
        let spec = *multi.encoder(d).spec();
        let format = ReprFormat::single(d);
        let mut rng = microdoppler::seed::rng_for(seed, "single-path");
        let mut single = SingleDomainModel::<f64>::new(format, spec, true, 0.01, &mut rng)?;
        let from = format!("encoder.{}.", domain_short_name(d));
        let entries: Vec<_> = multi
            .store
            .iter()
            .filter_map(|(_, p)| {
                if let Some(rest) = p.name.strip_prefix(&from) {
                    Some((format!("encoder.{rest}"), p.value.clone()))
                } else if p.name.starts_with("head.") {
                    Some((p.name.clone(), p.value.clone()))
                } else {
                    None
                }
            })
            .collect();
        single.store.load_values(&entries)?;
        let a = MultiView::new(&mut multi, &[d])?.logits(&refs)?;
        let b = Classifier::logits(&mut single, &refs)?;
        let bits = |v: &[[f64; 6]]| v.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
        if bits(&a) != bits(&b) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `max |logits(Σ e) − (Σ logits(e) − (k−1)·bias)|` over random embeddings.
pub fn head_linearity_error(k: usize, trials: usize, seed: u64) -> Result<f64> {
    use microdoppler::nn::Head;
    let mut rng = microdoppler::seed::rng_for(seed, "head-linearity");
    let mut store = ParamStore::<f64>::new();
    let head = Head::init(&mut store, "head", 128, 6, true, 0.01, &mut rng)?;
    let (_, bias) = rand_input(&mut rng, &[6]);
    store.get_mut(head.bias_id().expect("bias")).value = Tensor::new(&[6], bias.clone())?;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let es: Vec<_> = (0..k).map(|_| rand_input(&mut rng, &[1, 128]).1).collect();
        let sum: Vec<f64> = (0..128).map(|j| es.iter().map(|e| e[j]).sum()).collect();
        let lhs = head.apply(&store, &Tensor::new(&[1, 128], sum)?)?;
        let mut rhs: Vec<f64> = bias.iter().map(|b| -(k as f64 - 1.0) * b).collect();
        for e in &es {
            let l = head.apply(&store, &Tensor::new(&[1, 128], e.clone())?)?;
            for (r, v) in rhs.iter_mut().zip(l.data()) {
                *r += v;
            }
        }
        for (a, b) in lhs.data().iter().zip(&rhs) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Whether a bias-free head keeps its argmax under positive rescaling of
/// random embeddings.
pub fn bias_free_argmax_invariant(trials: usize, seed: u64) -> Result<bool> {
    use microdoppler::nn::Head;
    let mut rng = microdoppler::seed::rng_for(seed, "argmax-scaling");
    let mut store = ParamStore::<f64>::new();
    let head = Head::init(&mut store, "head", 128, 6, false, 0.01, &mut rng)?;
    let argmax = |t: &Tensor<f64>| t.data().iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    for _ in 0..trials {
        let e = rand_input(&mut rng, &[1, 128]).1;
        let s: f64 = rng.random_range(-3.0..3.0f64).exp();
        let scaled: Vec<f64> = e.iter().map(|v| v * s).collect();
        let a = argmax(&head.apply(&store, &Tensor::new(&[1, 128], e)?)?);
        let b = argmax(&head.apply(&store, &Tensor::new(&[1, 128], scaled)?)?);
        if a != b {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Runs the command-line binary and returns (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_microdoppler"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Like `cli` but panics with stderr unless the command succeeds.
pub fn cli_ok(args: &[&str]) -> String {
    let (code, stdout, stderr) = cli(args);
    assert_eq!(code, 0, "{args:?} failed: {stderr}");
    stdout
}

/// Writes a config file with a small network for fast command-line runs.
pub fn tiny_config_file(dir: &std::path::Path) -> std::path::PathBuf {
    let path = dir.join("tiny.ini");
    std::fs::write(
        &path,
        "[train]\nbatch_size = 16\nlr = 0.001\nwidths = 4,8,8,16,16\nembed_dim = 32\n",
    )
    .unwrap();
    path
}

pub fn path_str(p: &std::path::Path) -> &str {
    p.to_str().expect("utf-8 path")
}
