//! Steerable message passing, invariant/equivariant readouts and MLP baselines.
//!
//! Batched features live on a tape as an [`IrrepBatch`]: one matrix per irrep
//! type for scalars, three (x, y, z) for vectors. A [`GraphBatch`] flattens
//! many graphs into one disjoint union so a whole replay batch runs through a
//! network in a single pass.

mod e3mp;
mod features;
mod gate;
mod graph;
mod mlp;
mod segnn;
mod tensor_product;

pub use e3mp::{e3mp_forward, E3mpLayer};
pub use features::{Channels, IrrepBatch};
pub use gate::{gate_batch, gate_count, gated_nonlinearity, gated_spec};
pub use graph::{EuclideanGraph, GraphBatch, GraphInputs, GraphParts};
pub use mlp::{mlp_forward, Mlp, MlpActor, MlpCritic, DEFAULT_MLP_HIDDEN};
pub use segnn::{actor_forward, critic_forward, SegnnActor, SegnnCritic, SegnnSpec, DEFAULT_HIDDEN, DEFAULT_LAYERS};
pub use tensor_product::TensorProduct;
