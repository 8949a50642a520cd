//! Minimal reverse-mode automatic differentiation.
//!
//! A [`Graph`] is an append-only tape. Every operator records its inputs and
//! whatever it needs for the backward pass; [`Graph::backward`] walks the tape
//! in reverse and accumulates gradients. Parameters live outside the graph in
//! a [`ParamStore`] and are copied in for each forward pass, which keeps the
//! optimizer and checkpoint code independent of graph lifetimes.
//!
//! The operator set is deliberately small: 2-D convolution, batch
//! normalization, leaky ReLU, affine maps, elementwise addition, reshaping,
//! summation and softmax cross-entropy, plus a row-wise pick used for
//! saliency gradients.

pub mod check;
mod checkpoint;
mod conv;
mod gemm;
mod graph;
mod norm;
mod optim;
mod params;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointEntry};
pub use conv::conv_output_size;
pub use gemm::{matmul, Real};
pub use graph::{Graph, Mode, Var};
pub use norm::{BN_EPS, BN_MOMENTUM};
pub use optim::{Adam, PlateauScheduler};
pub use params::{Param, ParamId, ParamStore};
pub use tensor::Tensor;
