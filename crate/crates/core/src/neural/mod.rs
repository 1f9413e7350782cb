//! Dense double-precision numeric kernel with hand-written gradients.
//!
//! Gradients accumulate into [`Parameter::grad`]; callers zero them once per
//! training step. Every backward pass in the crate is verified against
//! [`gradient_check`].

mod gradcheck;
mod ops;
mod optim;
mod tensor;

pub use gradcheck::{gradient_check, relative_error};
pub use ops::{
    argmax, linear_backward, linear_forward, linear_forward_backward, softmax_cross_entropy, softmax_rows, Activation,
};
pub use optim::{Adam, AdamConfig};
pub use tensor::{Parameter, Tensor2D};

use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeuralError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
}
