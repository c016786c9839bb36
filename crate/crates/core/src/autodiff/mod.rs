//! A small dense reverse-mode differentiation engine.
//!
//! Enough to train two multilayer perceptrons against each other, including
//! the second-order path needed by an input-gradient penalty.

mod graph;
mod optim;
mod tensor;

pub use graph::{pairwise_distances, Graph, Var};
pub use optim::{AdamConfig, Parameter, ParameterSet};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: [usize; 2],
        right: [usize; 2],
    },
    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },
    #[error("{op} of an empty tensor")]
    Empty { op: &'static str },
    #[error("differentiated output must be a 1x1 scalar, got {0:?}")]
    NonScalarOutput([usize; 2]),
    #[error("node {0} does not influence the differentiated output")]
    NotInGraph(usize),
    #[error("unknown node {0}")]
    UnknownVar(usize),
    #[error("second-order differentiation through a first-order-only operation")]
    SecondOrderUnsupported,
    #[error("parameter set mismatch: {0}")]
    Parameters(String),
}
