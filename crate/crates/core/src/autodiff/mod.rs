//! Reverse-mode automatic differentiation for small dense networks.
//!
//! Forward computations are recorded on a [`Tape`] as a flat list of nodes in
//! evaluation order. [`Tape::backward`] walks that list once in reverse and
//! leaves d(root)/d(node) on every node that depends on a trainable leaf.
//! Parameter tensors live outside the tape; callers copy tape gradients back
//! with [`Tape::accumulate_into`], which adds rather than overwrites so that
//! several backward passes can feed one optimizer step.

mod adam;
mod init;
pub mod kernels;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use init::{kaiming_uniform, xavier_uniform};
pub use tape::{dense_forward, Activation, DenseBinding, DenseParams, LossKind, Tape, Var};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AutodiffError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("tensor shape {shape:?} holds {expected} values but {actual} were given")]
    Shape {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value in {0} input")]
    Numeric(&'static str),
    #[error("backward root must be a scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("invalid optimizer setting: {0}")]
    Optimizer(String),
}
