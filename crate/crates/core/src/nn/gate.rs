use super::features::{Channels, IrrepBatch};
use crate::autodiff::{sigmoid, Tape};
use crate::error::{Error, Result};
use crate::group::{Irrep, IrrepSpec, SteerableVector};

/// Number of vector (`l = 1`) channels in `spec`, i.e. the gates it needs.
pub fn gate_count(spec: &IrrepSpec) -> usize {
    spec.blocks().iter().filter(|(_, ir)| ir.l == 1).map(|(m, _)| m).sum()
}

/// `spec` with one extra `0e` gate channel per vector channel appended.
pub fn gated_spec(spec: &IrrepSpec) -> IrrepSpec {
    let g = gate_count(spec);
    if g == 0 {
        return spec.clone();
    }
    spec.concat(&IrrepSpec::single(g, Irrep::SCALAR))
}

/// Gated nonlinearity on one vector. The last `k` even scalar channels are the
/// gates for the `k` vector channels (in layout order); the remaining scalars
/// pass through `tanh`. The output drops the gate channels.
pub fn gated_nonlinearity(v: &SteerableVector) -> Result<SteerableVector> {
    let layout = v.spec().layout();
    let g = gate_count(v.spec());
    let scalar_idx: Vec<usize> = layout
        .iter()
        .filter(|b| b.irrep == Irrep::SCALAR)
        .flat_map(|b| (0..b.multiplicity).map(move |c| b.index(c, 0)))
        .collect();
    if scalar_idx.len() < g {
        return Err(Error::Spec(format!(
            "{} needs {g} gate scalars but has {} even scalars",
            v.spec(),
            scalar_idx.len()
        )));
    }
    let gates: Vec<f64> = scalar_idx[scalar_idx.len() - g..]
        .iter()
        .map(|&i| sigmoid(v.data()[i]))
        .collect();
    let kept_even = scalar_idx.len() - g;
    let mut blocks = Vec::new();
    let mut data = Vec::with_capacity(v.data().len());
    let mut seen_even = 0;
    let mut gate_i = 0;
    for b in &layout {
        let mut kept = 0;
        for c in 0..b.multiplicity {
            let start = b.index(c, 0);
            if b.irrep.l == 0 {
                if b.irrep == Irrep::SCALAR {
                    seen_even += 1;
                    if seen_even > kept_even {
                        continue;
                    }
                }
                data.push(v.data()[start].tanh());
            } else {
                let s = gates[gate_i];
                gate_i += 1;
                data.extend(v.data()[start..start + 3].iter().map(|x| x * s));
            }
            kept += 1;
        }
        if kept > 0 {
            blocks.push((kept, b.irrep));
        }
    }
    SteerableVector::new(IrrepSpec::new(blocks)?, data)
}

/// Batched gate on canonically ordered features: the last `k` columns of the
/// `0e` matrix gate the vector types in canonical order.
pub fn gate_batch(tape: &mut Tape, x: &IrrepBatch) -> Result<IrrepBatch> {
    let g: usize = x.types().filter(|(ir, _, _)| ir.l == 1).map(|(_, m, _)| m).sum();
    let m0 = x.multiplicity(Irrep::SCALAR);
    if m0 < g {
        return Err(Error::Spec(format!("{} needs {g} gate scalars", x.spec())));
    }
    let mut out = IrrepBatch::new(x.rows());
    let mut gates = None;
    let mut gate_off = 0;
    for (ir, m, ch) in x.types() {
        match ch {
            Channels::Scalar(s) if ir == Irrep::SCALAR => {
                if m0 > g {
                    let kept = tape.slice_cols(s, 0, m0 - g)?;
                    out.insert(ir, m0 - g, Channels::Scalar(tape.tanh(kept)));
                }
                if g > 0 {
                    let raw = tape.slice_cols(s, m0 - g, g)?;
                    gates = Some(tape.sigmoid(raw));
                }
            }
            Channels::Scalar(s) => out.insert(ir, m, Channels::Scalar(tape.tanh(s))),
            Channels::Vector(v) => {
                let all = gates.expect("0e sorts before every vector type");
                let gv = if m == g { all } else { tape.slice_cols(all, gate_off, m)? };
                gate_off += m;
                out.insert(
                    ir,
                    m,
                    Channels::Vector([tape.mul(v[0], gv)?, tape.mul(v[1], gv)?, tape.mul(v[2], gv)?]),
                );
            }
        }
    }
    Ok(out)
}
