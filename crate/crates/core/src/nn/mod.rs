//! Network architectures: the five-block convolutional encoder with its
//! linear head, the multi-domain model with one encoder per representation
//! and a shared head, the meta module, and input-gradient saliency.

mod encoder;
mod meta;
mod models;
mod saliency;

pub use encoder::{Encoder, EncoderSpec, Head};
pub use meta::{MetaActivation, MetaInput, MetaModule, META_HIDDEN};
pub use models::{sample_domains, MultiDomainModel, SingleDomainModel};
pub use saliency::{input_saliency, multi_input_saliency, threshold_map, write_pgm, SALIENCY_THRESHOLD};

use rand::Rng;

use crate::autograd::{Real, Tensor};
pub use crate::repr::ChannelKind;

/// Per-representation encoder key of the multi-domain model.
pub type Domain = ChannelKind;

/// Encoder order inside [`MultiDomainModel`].
pub const DOMAINS: [Domain; 5] = [
    ChannelKind::Magnitude,
    ChannelKind::PhaseWrapped,
    ChannelKind::PhaseUnwrapped,
    ChannelKind::Real,
    ChannelKind::Imag,
];

pub fn domain_index(d: Domain) -> usize {
    DOMAINS.iter().position(|&x| x == d).expect("every channel kind is a domain")
}

pub fn domain_short_name(d: Domain) -> &'static str {
    match d {
        ChannelKind::Magnitude => "mag",
        ChannelKind::PhaseWrapped => "phw",
        ChannelKind::PhaseUnwrapped => "phu",
        ChannelKind::Real => "re",
        ChannelKind::Imag => "im",
    }
}

/// Default LeakyReLU negative slope.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Kaiming-uniform weights with the LeakyReLU gain: U(−b, b) with
/// b = sqrt(6 / ((1 + a²) · fan_in)).
pub(crate) fn kaiming_uniform<F: Real, R: Rng + ?Sized>(
    shape: &[usize],
    fan_in: usize,
    slope: f64,
    rng: &mut R,
) -> Tensor<F> {
    let bound = (6.0 / ((1.0 + slope * slope) * fan_in as f64)).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| F::from_f64_lossy(rng.random_range(-bound..bound)))
        .collect();
    Tensor::new(shape, data).expect("shape matches generated values")
}

#[cfg(test)]
mod tests;
