use crate::autograd::Real;
use crate::data::LabeledSample;
use crate::error::{invalid, Result};
use crate::matrix::Matrix;
use crate::nn::{input_saliency, multi_input_saliency, threshold_map, Domain, MultiDomainModel, SingleDomainModel,
    SALIENCY_THRESHOLD};
use crate::repr::ReprFormat;
use crate::train::FeatureBank;
use crate::NUM_CLASSES;

/// Chunk size of saliency batches.
const CHUNK: usize = 16;

/// Mean input-gradient magnitude of one class, per channel, with its
/// thresholded display variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSaliency {
    pub class: usize,
    pub samples: usize,
    pub channel_names: Vec<String>,
    pub mean: Vec<Matrix<f64>>,
    pub thresholded: Vec<Matrix<f64>>,
}

fn class_members<'a>(samples: &[&'a LabeledSample], class: usize) -> Result<Vec<&'a LabeledSample>> {
    if class >= NUM_CLASSES {
        return invalid(format!("class index {class} out of range"));
    }
    let members: Vec<&LabeledSample> = samples.iter().copied().filter(|s| s.label == class).collect();
    if members.is_empty() {
        return invalid(format!("no samples of class {class}"));
    }
    Ok(members)
}

fn accumulate(acc: &mut [Matrix<f64>], grads: &[f64], n: usize, channels: usize, side: usize) {
    let plane = side * side;
    for i in 0..n {
        for (c, m) in acc.iter_mut().enumerate().take(channels) {
            let off = (i * channels + c) * plane;
            for (a, g) in m.as_mut_slice().iter_mut().zip(&grads[off..off + plane]) {
                *a += g;
            }
        }
    }
}

fn finish(class: usize, samples: usize, channel_names: Vec<String>, mut mean: Vec<Matrix<f64>>) -> ClassSaliency {
    for m in &mut mean {
        m.as_mut_slice().iter_mut().for_each(|v| *v /= samples as f64);
    }
    let thresholded = mean.iter().map(|m| threshold_map(m, SALIENCY_THRESHOLD)).collect();
    ClassSaliency { class, samples, channel_names, mean, thresholded }
}

/// Mean over the samples of `class` of `|∂ logit[class] / ∂ input|`.
pub fn aggregate_saliency<F: Real>(
    model: &mut SingleDomainModel<F>,
    samples: &[&LabeledSample],
    class: usize,
) -> Result<ClassSaliency> {
    let members = class_members(samples, class)?;
    let fmt = model.format;
    let side = crate::dsp::MAP_SIZE;
    let mut acc = vec![Matrix::zeros(side, side); fmt.channels()];
    for chunk in members.chunks(CHUNK) {
        let bank = FeatureBank::<F>::from_maps(chunk.iter().map(|s| &s.dtm), fmt)?;
        let idx: Vec<usize> = (0..chunk.len()).collect();
        let sal = input_saliency(model, &bank.batch(&idx)?, &vec![class; chunk.len()])?;
        accumulate(&mut acc, sal.data(), chunk.len(), fmt.channels(), side);
    }
    let names = fmt.kinds().iter().map(|&k| ReprFormat::single(k).name().to_string()).collect();
    Ok(finish(class, members.len(), names, acc))
}

/// Per-domain class saliency of the multi-domain model with `active`
/// encoders.
pub fn aggregate_multi_saliency<F: Real>(
    model: &mut MultiDomainModel<F>,
    samples: &[&LabeledSample],
    class: usize,
    active: &[Domain],
) -> Result<ClassSaliency> {
    let members = class_members(samples, class)?;
    let side = crate::dsp::MAP_SIZE;
    let mut acc = vec![Matrix::zeros(side, side); active.len()];
    for chunk in members.chunks(CHUNK) {
        let idx: Vec<usize> = (0..chunk.len()).collect();
        let inputs = active
            .iter()
            .map(|&d| {
                let bank = FeatureBank::<F>::from_maps(chunk.iter().map(|s| &s.dtm), ReprFormat::single(d))?;
                Ok((d, bank.batch(&idx)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let sal = multi_input_saliency(model, &inputs, active, &vec![class; chunk.len()])?;
        for (k, (_, t)) in sal.iter().enumerate() {
            accumulate(std::slice::from_mut(&mut acc[k]), t.data(), chunk.len(), 1, side);
        }
    }
    let names = active.iter().map(|&d| ReprFormat::single(d).name().to_string()).collect();
    Ok(finish(class, members.len(), names, acc))
}
