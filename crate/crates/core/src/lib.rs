//! Complex micro-Doppler representations for convolutional activity
//! classifiers.
//!
//! The crate covers the whole chain: raw FMCW chirps are range-compressed,
//! summed over range and turned into a 128×128 complex Doppler-time map
//! ([`dsp`]); the map is decomposed into one of eleven real channel formats
//! ([`repr`]); a small reverse-mode autodiff engine ([`autograd`]) drives the
//! single-domain, multi-domain and meta classifiers ([`nn`], [`train`]); and
//! [`analysis`] computes cross-representation error agreement, unique-correct
//! counts, the any-representation upper bound and saliency maps.

pub mod analysis;
pub mod autograd;
pub mod cli;
pub mod data;
pub mod dsp;
pub mod error;
pub mod matrix;
pub mod nn;
pub mod repr;
pub mod seed;
pub mod train;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Number of activity classes.
pub const NUM_CLASSES: usize = 6;

/// Activity names in label order.
pub const CLASS_NAMES: [&str; NUM_CLASSES] = [
    "walking",
    "sitting-down",
    "standing-up",
    "pick-up",
    "drinking",
    "fall",
];
