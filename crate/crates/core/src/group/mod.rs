//! Representation theory of O(3) and E(3) restricted to degrees `l <= 1`.

mod cg;
mod element;
mod irrep;
mod steerable;

pub use cg::{allowed_paths, cg_tensor_product, CgPath, PathKind};
pub use element::{add, clip_norm, cross, det, dot, mat_vec, matmul, norm, scale, sub, transpose, GroupElement, Mat3, Vec3};
pub use irrep::{irrep_matrix, BlockLayout, Irrep, IrrepSpec, Parity};
pub use steerable::{sh_spec, spherical_harmonics_l1, spherical_harmonics_l1_or_zero, transform_steerable, SteerableVector};
