use std::fmt;
use std::str::FromStr;

use super::element::GroupElement;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn times(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn sign(self, det: f64) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => det.signum(),
        }
    }
}

/// Irreducible representation of O(3): degree `l` and parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Irrep {
    pub l: u32,
    pub parity: Parity,
}

impl Irrep {
    /// Invariant scalar.
    pub const SCALAR: Irrep = Irrep::new(0, Parity::Even);
    pub const PSEUDOSCALAR: Irrep = Irrep::new(0, Parity::Odd);
    /// Polar vector (positions, velocities, forces).
    pub const VECTOR: Irrep = Irrep::new(1, Parity::Odd);
    /// Axial vector (cross products of polar vectors).
    pub const AXIAL: Irrep = Irrep::new(1, Parity::Even);

    pub const fn new(l: u32, parity: Parity) -> Self {
        Self { l, parity }
    }

    pub fn dim(self) -> usize {
        2 * self.l as usize + 1
    }

    pub fn check_supported(self) -> Result<()> {
        if self.l > 1 {
            Err(Error::UnsupportedDegree(self.l))
        } else {
            Ok(())
        }
    }

    /// `D(g)` on this irrep. l=1 components are ordered (x, y, z), so the
    /// polar-vector matrix is `R` itself.
    pub fn matrix(self, g: &GroupElement) -> Result<Tensor> {
        self.check_supported()?;
        let s = self.parity.sign(g.det());
        match self.l {
            0 => Ok(Tensor::scalar(s)),
            _ => {
                // Odd vectors pick up det(R)·R·det(R) = R; even ones det(R)·R.
                let k = match self.parity {
                    Parity::Odd => 1.0,
                    Parity::Even => g.det().signum(),
                };
                let r = g.rotation();
                let data = r.iter().flat_map(|row| row.iter().map(move |v| k * v)).collect();
                Tensor::matrix(3, 3, data)
            }
        }
    }
}

/// `D(g)` for `irrep`.
pub fn irrep_matrix(irrep: Irrep, g: &GroupElement) -> Result<Tensor> {
    irrep.matrix(g)
}

impl fmt::Display for Irrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.parity {
            Parity::Even => 'e',
            Parity::Odd => 'o',
        };
        write!(f, "{}{}", self.l, p)
    }
}

impl FromStr for Irrep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (l, p) = s.split_at(s.len().saturating_sub(1));
        let parity = match p {
            "e" => Parity::Even,
            "o" => Parity::Odd,
            _ => return Err(Error::Parse(format!("bad irrep '{s}'"))),
        };
        let l = l.parse().map_err(|_| Error::Parse(format!("bad irrep '{s}'")))?;
        Ok(Irrep::new(l, parity))
    }
}

/// Ordered direct sum `m₁×ρ₁ ⊕ m₂×ρ₂ ⊕ …`.
///
/// Layout: blocks in list order; inside a block, channel `c` occupies the
/// `2l+1` consecutive entries starting at `offset + c·(2l+1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IrrepSpec {
    blocks: Vec<(usize, Irrep)>,
}

/// Position of one block inside a flat feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    pub offset: usize,
    pub multiplicity: usize,
    pub irrep: Irrep,
}

impl BlockLayout {
    pub fn len(&self) -> usize {
        self.multiplicity * self.irrep.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.multiplicity == 0
    }

    /// Flat index of component `m` of channel `c`.
    pub fn index(&self, c: usize, m: usize) -> usize {
        self.offset + c * self.irrep.dim() + m
    }
}

impl IrrepSpec {
    pub fn new(blocks: Vec<(usize, Irrep)>) -> Result<Self> {
        if blocks.iter().any(|&(m, _)| m == 0) {
            return Err(Error::Spec("multiplicities must be positive".into()));
        }
        Ok(Self { blocks })
    }

    pub fn single(multiplicity: usize, irrep: Irrep) -> Self {
        Self {
            blocks: vec![(multiplicity.max(1), irrep)],
        }
    }

    pub fn blocks(&self) -> &[(usize, Irrep)] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|&(m, ir)| m * ir.dim()).sum()
    }

    pub fn layout(&self) -> Vec<BlockLayout> {
        let mut offset = 0;
        self.blocks
            .iter()
            .map(|&(multiplicity, irrep)| {
                let b = BlockLayout {
                    offset,
                    multiplicity,
                    irrep,
                };
                offset += b.len();
                b
            })
            .collect()
    }

    pub fn concat(&self, other: &IrrepSpec) -> IrrepSpec {
        let mut blocks = self.blocks.clone();
        blocks.extend_from_slice(&other.blocks);
        IrrepSpec { blocks }
    }

    /// Total multiplicity of `irrep` across all blocks.
    pub fn multiplicity_of(&self, irrep: Irrep) -> usize {
        self.blocks.iter().filter(|(_, ir)| *ir == irrep).map(|(m, _)| m).sum()
    }

    /// One block per irrep type, types sorted (0e, 0o, 1e, 1o).
    pub fn canonical(&self) -> IrrepSpec {
        let mut types: Vec<Irrep> = self.blocks.iter().map(|&(_, ir)| ir).collect();
        types.sort();
        types.dedup();
        IrrepSpec {
            blocks: types.into_iter().map(|ir| (self.multiplicity_of(ir), ir)).collect(),
        }
    }

    pub fn check_supported(&self) -> Result<()> {
        self.blocks.iter().try_for_each(|(_, ir)| ir.check_supported())
    }
}

impl fmt::Display for IrrepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|(m, ir)| format!("{m}x{ir}")).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for IrrepSpec {
    type Err = Error;

    /// Parses `"32x0e+8x1o"`.
    fn from_str(s: &str) -> Result<Self> {
        let blocks = s
            .split('+')
            .map(|part| {
                let (m, ir) = part
                    .trim()
                    .split_once('x')
                    .ok_or_else(|| Error::Parse(format!("bad irrep block '{part}'")))?;
                let m: usize = m.parse().map_err(|_| Error::Parse(format!("bad multiplicity in '{part}'")))?;
                Ok((m, ir.parse()?))
            })
            .collect::<Result<Vec<_>>>()?;
        IrrepSpec::new(blocks)
    }
}
