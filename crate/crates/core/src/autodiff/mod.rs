//! Reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! A [`Tape`] records every op in creation order; [`Tape::backward`] sweeps it
//! once in reverse. Trainable tensors live in a [`ParamStore`] and enter a tape
//! through [`Tape::param`].

mod optim;
mod param;
mod tape;
mod tensor;

pub use optim::{Adam, Optimizer, Sgd};
pub use param::{ParamId, ParamStore, Parameter};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

pub(crate) use tape::sigmoid;

/// Stabiliser inside `sqrt(Σx² + ε)` so norms of zero-padded features stay differentiable.
pub const NORM_EPS: f64 = 1e-12;
