//! Minimal reverse-mode differentiation over whole tensors.
//!
//! Only the primitives the breath models need are provided: valid and causal
//! dilated 1-D convolution, weight normalisation, a fused LSTM, ReLU,
//! channel concatenation, residual add, linear layers, spatial dropout and
//! softmax cross-entropy. Ops are recorded on a [`Graph`] and differentiated
//! with [`Graph::backward`]; [`Adam`] applies the updates.

mod checkpoint;
mod graph;
mod kernels;
mod param;
mod scalar;
mod tensor;

pub use checkpoint::{NamedTensor, WeightSet, WEIGHTS_VERSION};
pub use graph::{Gradients, Graph, Var};
pub use param::{glorot_uniform, Adam, Parameter};
pub use scalar::Scalar;
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum AutodiffError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite values ({count}) produced by {op} at node {node}")]
    NonFinite { op: &'static str, node: usize, count: usize },
    #[error("non-finite gradient ({count} entries) for parameter {param}")]
    NonFiniteGradient { param: String, count: usize },
    #[error("weight normalisation: filter {filter} has zero norm")]
    ZeroNorm { filter: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[cfg(test)]
mod tests;
