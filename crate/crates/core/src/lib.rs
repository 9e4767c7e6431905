//! Symmetric cooperative multi-agent reinforcement learning.
//!
//! The crate is layered bottom-up:
//!
//! - [`group`]: O(3)/E(3) elements, irreps with parity, spherical harmonics and
//!   Clebsch–Gordan products for degrees `l <= 1`.
//! - [`autodiff`]: a small tape-based reverse-mode engine.
//! - [`nn`]: steerable message-passing networks, readouts and MLP baselines.
//! - [`envs`]: the E(3)-symmetric navigation game and a C4-symmetric gridworld.
//! - [`graph`]: state/action/observation to Euclidean graph conversion.
//! - [`marl`]: MADDPG with equivariant or MLP actors and critics.
//! - [`lab`]: invariancy measures and exhaustive tabular theorem checks.

pub mod autodiff;
pub mod envs;
pub mod error;
pub mod graph;
pub mod group;
pub mod lab;
pub mod marl;
pub mod nn;

pub use error::{Error, Result};
pub use group::{GroupElement, Irrep, IrrepSpec, Parity, SteerableVector, Vec3};
