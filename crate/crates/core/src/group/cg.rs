//! Clebsch–Gordan products for degrees `l <= 1`.
//!
//! With components stored in (x, y, z) order the coupling coefficients reduce
//! to five bilinear maps: scalar·scalar, scalar·vector, vector·scalar, the dot
//! product and the cross product.

use super::element::{cross, dot, Vec3};
use super::irrep::{Irrep, IrrepSpec};
use super::steerable::SteerableVector;
use crate::error::{Error, Result};

/// Which bilinear map couples the two inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathKind {
    /// 0 ⊗ 0 → 0
    ScalarScalar,
    /// 0 ⊗ 1 → 1
    ScalarVector,
    /// 1 ⊗ 0 → 1
    VectorScalar,
    /// 1 ⊗ 1 → 0
    Dot,
    /// 1 ⊗ 1 → 1
    Cross,
}

impl PathKind {
    /// Selection rule for degrees and parities.
    pub fn classify(a: Irrep, b: Irrep, out: Irrep) -> Result<PathKind> {
        for ir in [a, b, out] {
            ir.check_supported()?;
        }
        if a.parity.times(b.parity) != out.parity {
            return Err(Error::InvalidPath(format!("{a} x {b} -> {out}: parity")));
        }
        match (a.l, b.l, out.l) {
            (0, 0, 0) => Ok(PathKind::ScalarScalar),
            (0, 1, 1) => Ok(PathKind::ScalarVector),
            (1, 0, 1) => Ok(PathKind::VectorScalar),
            (1, 1, 0) => Ok(PathKind::Dot),
            (1, 1, 1) => Ok(PathKind::Cross),
            _ => Err(Error::InvalidPath(format!("{a} x {b} -> {out}: degree"))),
        }
    }
}

/// One weighted coupling between block `a_block` of the first input, block
/// `b_block` of the second and block `out_block` of the output.
///
/// `weights` has `m_a·m_b·m_out` entries indexed `((i·m_b + j)·m_out + k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CgPath {
    pub a_block: usize,
    pub b_block: usize,
    pub out_block: usize,
    pub weights: Vec<f64>,
}

/// Every `(a_block, b_block, out_block)` triple allowed by the selection rules.
pub fn allowed_paths(a: &IrrepSpec, b: &IrrepSpec, out: &IrrepSpec) -> Vec<(usize, usize, usize, PathKind)> {
    let mut paths = Vec::new();
    for (ia, &(_, ra)) in a.blocks().iter().enumerate() {
        for (ib, &(_, rb)) in b.blocks().iter().enumerate() {
            for (io, &(_, ro)) in out.blocks().iter().enumerate() {
                if let Ok(kind) = PathKind::classify(ra, rb, ro) {
                    paths.push((ia, ib, io, kind));
                }
            }
        }
    }
    paths
}

fn vec_at(v: &[f64], i: usize) -> Vec3 {
    [v[i], v[i + 1], v[i + 2]]
}

/// Weighted sum of Clebsch–Gordan couplings of `a` and `b` into `out_spec`.
pub fn cg_tensor_product(
    a: &SteerableVector,
    b: &SteerableVector,
    out_spec: &IrrepSpec,
    paths: &[CgPath],
) -> Result<SteerableVector> {
    let (la, lb, lo) = (a.spec().layout(), b.spec().layout(), out_spec.layout());
    let mut out = vec![0.0; out_spec.dim()];
    for p in paths {
        let (Some(ba), Some(bb), Some(bo)) = (la.get(p.a_block), lb.get(p.b_block), lo.get(p.out_block)) else {
            return Err(Error::InvalidPath(format!(
                "block index out of range ({}, {}, {})",
                p.a_block, p.b_block, p.out_block
            )));
        };
        let kind = PathKind::classify(ba.irrep, bb.irrep, bo.irrep)?;
        let (ma, mb, mo) = (ba.multiplicity, bb.multiplicity, bo.multiplicity);
        if p.weights.len() != ma * mb * mo {
            return Err(Error::InvalidPath(format!(
                "path expects {} weights, got {}",
                ma * mb * mo,
                p.weights.len()
            )));
        }
        let (ad, bd) = (a.data(), b.data());
        for i in 0..ma {
            for j in 0..mb {
                // The coupled value for channel pair (i, j), as 1 or 3 components.
                let coupled: [f64; 3] = match kind {
                    PathKind::ScalarScalar => [ad[ba.index(i, 0)] * bd[bb.index(j, 0)], 0.0, 0.0],
                    PathKind::ScalarVector => {
                        let s = ad[ba.index(i, 0)];
                        let v = vec_at(bd, bb.index(j, 0));
                        [s * v[0], s * v[1], s * v[2]]
                    }
                    PathKind::VectorScalar => {
                        let s = bd[bb.index(j, 0)];
                        let v = vec_at(ad, ba.index(i, 0));
                        [s * v[0], s * v[1], s * v[2]]
                    }
                    PathKind::Dot => [dot(&vec_at(ad, ba.index(i, 0)), &vec_at(bd, bb.index(j, 0))), 0.0, 0.0],
                    PathKind::Cross => cross(&vec_at(ad, ba.index(i, 0)), &vec_at(bd, bb.index(j, 0))),
                };
                let n = bo.irrep.dim();
                for k in 0..mo {
                    let w = p.weights[(i * mb + j) * mo + k];
                    for (m, c) in coupled.iter().take(n).enumerate() {
                        out[bo.index(k, m)] += w * c;
                    }
                }
            }
        }
    }
    SteerableVector::new(out_spec.clone(), out)
}
