use std::collections::BTreeMap;
use std::sync::Arc;

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::group::{Irrep, IrrepSpec, SteerableVector};

/// Channels of one irrep type on a tape: a `[rows, m]` matrix for scalars,
/// one `[rows, m]` matrix per Cartesian component for vectors.
#[derive(Clone, Copy, Debug)]
pub enum Channels {
    Scalar(Var),
    Vector([Var; 3]),
}

impl Channels {
    pub fn vars(&self) -> &[Var] {
        match self {
            Channels::Scalar(v) => std::slice::from_ref(v),
            Channels::Vector(v) => v,
        }
    }

    fn map(&self, mut f: impl FnMut(Var) -> Result<Var>) -> Result<Channels> {
        Ok(match self {
            Channels::Scalar(v) => Channels::Scalar(f(*v)?),
            Channels::Vector([x, y, z]) => Channels::Vector([f(*x)?, f(*y)?, f(*z)?]),
        })
    }
}

/// A batch of steerable feature rows on a tape, grouped by irrep type.
///
/// Types are kept in canonical `Irrep` order (0e, 0o, 1e, 1o); within one type
/// channels keep the order in which their blocks appeared.
#[derive(Clone, Debug)]
pub struct IrrepBatch {
    rows: usize,
    parts: BTreeMap<Irrep, (usize, Channels)>,
}

impl IrrepBatch {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            parts: BTreeMap::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn insert(&mut self, irrep: Irrep, multiplicity: usize, channels: Channels) {
        self.parts.insert(irrep, (multiplicity, channels));
    }

    pub fn get(&self, irrep: Irrep) -> Option<(usize, Channels)> {
        self.parts.get(&irrep).copied()
    }

    pub fn multiplicity(&self, irrep: Irrep) -> usize {
        self.parts.get(&irrep).map_or(0, |p| p.0)
    }

    pub fn types(&self) -> impl Iterator<Item = (Irrep, usize, Channels)> + '_ {
        self.parts.iter().map(|(&ir, &(m, c))| (ir, m, c))
    }

    /// Canonical spec: one block per irrep type.
    pub fn spec(&self) -> IrrepSpec {
        IrrepSpec::new(self.parts.iter().map(|(&ir, &(m, _))| (m, ir)).collect()).expect("positive multiplicities")
    }

    /// Constant features from flat rows laid out per `spec`.
    pub fn constant(tape: &mut Tape, spec: &IrrepSpec, rows: &[&[f64]]) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.len() != spec.dim()) {
            return Err(Error::Spec(format!("row of length {} for spec {spec}", bad.len())));
        }
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::from_flat(tape, spec, rows.len(), &flat)
    }

    /// Constant features from a row-major `[n, spec.dim()]` buffer.
    pub fn from_flat(tape: &mut Tape, spec: &IrrepSpec, n: usize, data: &[f64]) -> Result<Self> {
        spec.check_supported()?;
        if n == 0 {
            return Err(Error::InvalidArgument("feature batch needs at least one row".into()));
        }
        if data.len() != n * spec.dim() {
            return Err(Error::Spec(format!("{} values for {n} rows of spec {spec}", data.len())));
        }
        let d = spec.dim();
        let rows: Vec<&[f64]> = data.chunks(d).collect();
        let mut by_type: BTreeMap<Irrep, Vec<(usize, usize)>> = BTreeMap::new();
        for b in spec.layout() {
            let cols = by_type.entry(b.irrep).or_default();
            cols.extend((0..b.multiplicity).map(|c| (b.index(c, 0), 0)));
        }
        let mut out = IrrepBatch::new(n);
        for (irrep, chans) in by_type {
            let m = chans.len();
            let comps = irrep.dim();
            let mut mats: Vec<Vec<f64>> = vec![Vec::with_capacity(n * m); comps];
            for row in &rows {
                for &(start, _) in &chans {
                    for (k, mat) in mats.iter_mut().enumerate() {
                        mat.push(row[start + k]);
                    }
                }
            }
            let vars: Vec<Var> = mats
                .into_iter()
                .map(|d| Tensor::matrix(n, m, d).map(|t| tape.constant(t)))
                .collect::<Result<_>>()?;
            let ch = if comps == 1 {
                Channels::Scalar(vars[0])
            } else {
                Channels::Vector([vars[0], vars[1], vars[2]])
            };
            out.insert(irrep, m, ch);
        }
        Ok(out)
    }

    pub fn zeros(tape: &mut Tape, spec: &IrrepSpec, n: usize) -> Result<Self> {
        Self::from_flat(tape, spec, n, &vec![0.0; n * spec.dim()])
    }

    pub fn from_steerable(tape: &mut Tape, vs: &[SteerableVector]) -> Result<Self> {
        let spec = vs
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty feature list".into()))?
            .spec()
            .clone();
        if vs.iter().any(|v| v.spec() != &spec) {
            return Err(Error::Spec("feature rows do not share one spec".into()));
        }
        let rows: Vec<&[f64]> = vs.iter().map(SteerableVector::data).collect();
        Self::constant(tape, &spec, &rows)
    }

    /// Reads the values back as one [`SteerableVector`] per row (canonical spec).
    pub fn to_steerable(&self, tape: &Tape) -> Vec<SteerableVector> {
        let spec = self.spec();
        (0..self.rows)
            .map(|r| {
                let mut data = Vec::with_capacity(spec.dim());
                for (_, (m, ch)) in &self.parts {
                    for c in 0..*m {
                        for &v in ch.vars() {
                            data.push(tape.value(v).get(r, c));
                        }
                    }
                }
                SteerableVector::new(spec.clone(), data).expect("dimension by construction")
            })
            .collect()
    }

    /// Per-type column concatenation `[self | other]`.
    pub fn concat(&self, tape: &mut Tape, other: &IrrepBatch) -> Result<IrrepBatch> {
        if self.rows != other.rows {
            return Err(Error::Shape {
                op: "irrep_concat",
                lhs: vec![self.rows],
                rhs: vec![other.rows],
            });
        }
        let mut out = self.clone();
        for (&ir, &(m, ch)) in &other.parts {
            match out.parts.get(&ir).copied() {
                None => out.insert(ir, m, ch),
                Some((m0, ch0)) => {
                    let merged = match (ch0, ch) {
                        (Channels::Scalar(a), Channels::Scalar(b)) => Channels::Scalar(tape.concat(&[a, b])?),
                        (Channels::Vector(a), Channels::Vector(b)) => Channels::Vector([
                            tape.concat(&[a[0], b[0]])?,
                            tape.concat(&[a[1], b[1]])?,
                            tape.concat(&[a[2], b[2]])?,
                        ]),
                        _ => unreachable!("irrep type fixes the channel kind"),
                    };
                    out.insert(ir, m0 + m, merged);
                }
            }
        }
        Ok(out)
    }

    pub fn gather_rows(&self, tape: &mut Tape, idx: &Arc<[usize]>) -> Result<IrrepBatch> {
        let mut out = IrrepBatch::new(idx.len());
        for (&ir, &(m, ch)) in &self.parts {
            out.insert(ir, m, ch.map(|v| tape.gather_rows(v, idx.clone()))?);
        }
        Ok(out)
    }

    pub fn scatter_add_rows(&self, tape: &mut Tape, idx: &Arc<[usize]>, rows: usize) -> Result<IrrepBatch> {
        let mut out = IrrepBatch::new(rows);
        for (&ir, &(m, ch)) in &self.parts {
            out.insert(ir, m, ch.map(|v| tape.scatter_add_rows(v, idx.clone(), rows))?);
        }
        Ok(out)
    }

    /// Scales row `r` of every channel by `s[r]` (an invariant per-row factor).
    pub fn mul_col(&self, tape: &mut Tape, s: Var) -> Result<IrrepBatch> {
        let mut out = IrrepBatch::new(self.rows);
        for (&ir, &(m, ch)) in &self.parts {
            out.insert(ir, m, ch.map(|v| tape.mul_col(v, s))?);
        }
        Ok(out)
    }
}
