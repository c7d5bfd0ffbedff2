//! Minimal reverse-mode automatic differentiation for the SEGAN op set.
//!
//! A [`Graph`] records one forward pass; [`Graph::backward`] returns per-node
//! gradients which callers fold into [`Parameter`]s before an [`RmsProp`]
//! step. The op set is closed: strided and transposed 1-D convolution,
//! PReLU, leaky ReLU, tanh, channel concatenation, add, scale, reshape, and
//! the L1 / MSE losses.

mod graph;
mod kernels;
mod optim;
mod scalar;
mod tensor;

pub use graph::{conv1d_out_len, conv_transpose1d_out_len, ConvSpec, ConvTransposeSpec, Gradients, Graph, Var};
pub use optim::{rmsprop_step, RmsProp};
pub use scalar::Scalar;
pub use tensor::{Parameter, Tensor};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("{op}: shape mismatch: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("{op}: non-finite value during {stage} pass")]
    NonFinite { op: &'static str, stage: &'static str },
    #[error("backward needs a scalar output, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("parameter {name} has no gradient")]
    MissingGrad { name: String },
}
