use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::features::{Channels, IrrepBatch};
use crate::autodiff::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::group::{Irrep, IrrepSpec, PathKind};

#[derive(Clone, Debug)]
struct Path {
    a: Irrep,
    b: Irrep,
    out: Irrep,
    kind: PathKind,
    weight: ParamId,
}

/// Learned, fully connected Clebsch–Gordan product between two batched
/// steerable inputs. Every allowed `(type_a, type_b → type_out)` path owns a
/// `[m_a·m_b, m_out]` weight matrix; invariant scalar outputs get a bias.
#[derive(Clone, Debug)]
pub struct TensorProduct {
    a_spec: IrrepSpec,
    b_spec: IrrepSpec,
    out_spec: IrrepSpec,
    paths: Vec<Path>,
    bias: Option<ParamId>,
}

impl TensorProduct {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        a_spec: &IrrepSpec,
        b_spec: &IrrepSpec,
        out_spec: &IrrepSpec,
    ) -> Result<Self> {
        let (a_spec, b_spec, out_spec) = (a_spec.canonical(), b_spec.canonical(), out_spec.canonical());
        for s in [&a_spec, &b_spec, &out_spec] {
            s.check_supported()?;
        }
        let mut found = Vec::new();
        for &(ma, ra) in a_spec.blocks() {
            for &(mb, rb) in b_spec.blocks() {
                for &(mo, ro) in out_spec.blocks() {
                    if let Ok(kind) = PathKind::classify(ra, rb, ro) {
                        found.push((ra, rb, ro, kind, ma * mb, mo));
                    }
                }
            }
        }
        let mut fan_in: BTreeMap<Irrep, usize> = BTreeMap::new();
        for &(_, _, ro, _, n_in, _) in &found {
            *fan_in.entry(ro).or_default() += n_in;
        }
        for &(_, ro) in out_spec.blocks() {
            if !fan_in.contains_key(&ro) {
                return Err(Error::InvalidPath(format!(
                    "no allowed path produces {ro} from {a_spec} x {b_spec}"
                )));
            }
        }
        let paths = found
            .into_iter()
            .map(|(a, b, out, kind, n_in, n_out)| {
                let std = (1.0 / fan_in[&out] as f64).sqrt();
                let normal = Normal::new(0.0, std).expect("finite std");
                let data = (0..n_in * n_out).map(|_| normal.sample(rng)).collect();
                let weight = store.add(format!("{name}.{a}x{b}->{out}"), Tensor::matrix(n_in, n_out, data)?);
                Ok(Path {
                    a,
                    b,
                    out,
                    kind,
                    weight,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let m0 = out_spec.multiplicity_of(Irrep::SCALAR);
        let bias = (m0 > 0).then(|| store.add(format!("{name}.bias"), Tensor::zeros(&[1, m0])));
        Ok(Self {
            a_spec,
            b_spec,
            out_spec,
            paths,
            bias,
        })
    }

    pub fn a_spec(&self) -> &IrrepSpec {
        &self.a_spec
    }

    pub fn b_spec(&self) -> &IrrepSpec {
        &self.b_spec
    }

    pub fn out_spec(&self) -> &IrrepSpec {
        &self.out_spec
    }

    pub fn path_kinds(&self) -> Vec<(Irrep, Irrep, Irrep, PathKind)> {
        self.paths.iter().map(|p| (p.a, p.b, p.out, p.kind)).collect()
    }

    pub fn weight_ids(&self) -> Vec<ParamId> {
        self.paths.iter().map(|p| p.weight).chain(self.bias).collect()
    }

    fn check_input(spec: &IrrepSpec, x: &IrrepBatch, which: &str) -> Result<()> {
        if &x.spec() != spec {
            return Err(Error::Spec(format!(
                "tensor product input {which} has spec {}, expected {spec}",
                x.spec()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, a: &IrrepBatch, b: &IrrepBatch) -> Result<IrrepBatch> {
        Self::check_input(&self.a_spec, a, "a")?;
        Self::check_input(&self.b_spec, b, "b")?;
        // Per output type, per component: contributions to be summed.
        let mut acc: BTreeMap<Irrep, Vec<Vec<Var>>> = BTreeMap::new();
        for p in &self.paths {
            let (_, ca) = a.get(p.a).expect("checked spec");
            let (_, cb) = b.get(p.b).expect("checked spec");
            let w = tape.param(store, p.weight);
            let comps: Vec<Var> = match (p.kind, ca, cb) {
                (PathKind::ScalarScalar, Channels::Scalar(sa), Channels::Scalar(sb)) => {
                    let o = tape.row_outer(sa, sb)?;
                    vec![tape.matmul(o, w)?]
                }
                (PathKind::ScalarVector, Channels::Scalar(sa), Channels::Vector(vb)) => vb
                    .iter()
                    .map(|&c| {
                        let o = tape.row_outer(sa, c)?;
                        tape.matmul(o, w)
                    })
                    .collect::<Result<_>>()?,
                (PathKind::VectorScalar, Channels::Vector(va), Channels::Scalar(sb)) => va
                    .iter()
                    .map(|&c| {
                        let o = tape.row_outer(c, sb)?;
                        tape.matmul(o, w)
                    })
                    .collect::<Result<_>>()?,
                (PathKind::Dot, Channels::Vector(va), Channels::Vector(vb)) => {
                    let x = tape.row_outer(va[0], vb[0])?;
                    let y = tape.row_outer(va[1], vb[1])?;
                    let z = tape.row_outer(va[2], vb[2])?;
                    let xy = tape.add(x, y)?;
                    let d = tape.add(xy, z)?;
                    vec![tape.matmul(d, w)?]
                }
                (PathKind::Cross, Channels::Vector(va), Channels::Vector(vb)) => (0..3)
                    .map(|c| {
                        let (i, j) = ((c + 1) % 3, (c + 2) % 3);
                        let p1 = tape.row_outer(va[i], vb[j])?;
                        let p2 = tape.row_outer(va[j], vb[i])?;
                        let d = tape.sub(p1, p2)?;
                        tape.matmul(d, w)
                    })
                    .collect::<Result<_>>()?,
                _ => unreachable!("path kind matches channel kinds by construction"),
            };
            let slot = acc.entry(p.out).or_insert_with(|| vec![Vec::new(); comps.len()]);
            for (s, c) in slot.iter_mut().zip(comps) {
                s.push(c);
            }
        }
        let mut out = IrrepBatch::new(a.rows());
        for (ir, comps) in acc {
            let m = self.out_spec.multiplicity_of(ir);
            let mut summed = Vec::with_capacity(comps.len());
            for terms in comps {
                let mut total = terms[0];
                for &t in &terms[1..] {
                    total = tape.add(total, t)?;
                }
                summed.push(total);
            }
            let ch = if summed.len() == 1 {
                let mut s = summed[0];
                if ir == Irrep::SCALAR {
                    if let Some(bias) = self.bias {
                        let b = tape.param(store, bias);
                        s = tape.add_row(s, b)?;
                    }
                }
                Channels::Scalar(s)
            } else {
                Channels::Vector([summed[0], summed[1], summed[2]])
            };
            out.insert(ir, m, ch);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{cg_tensor_product, CgPath, GroupElement, SteerableVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_rows(rng: &mut ChaCha8Rng, spec: &IrrepSpec, n: usize) -> Vec<SteerableVector> {
        (0..n)
            .map(|_| SteerableVector::new(spec.clone(), (0..spec.dim()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
            .collect()
    }

    /// The batched product agrees with the per-vector reference implementation.
    #[test]
    fn matches_reference_cg() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a_spec: IrrepSpec = "3x0e+2x1o".parse().unwrap();
        let b_spec: IrrepSpec = "2x0e+1x1o".parse().unwrap();
        let o_spec: IrrepSpec = "4x0e+2x1e+3x1o".parse().unwrap();
        let mut store = ParamStore::new();
        let tp = TensorProduct::new(&mut store, &mut rng, "tp", &a_spec, &b_spec, &o_spec).unwrap();
        // random nonzero bias
        if let Some(b) = tp.bias {
            store.value_mut(b).data_mut().iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
        let block = |spec: &IrrepSpec, ir: Irrep| spec.blocks().iter().position(|&(_, r)| r == ir).unwrap();
        let ref_paths: Vec<CgPath> = tp
            .paths
            .iter()
            .map(|p| CgPath {
                a_block: block(&a_spec, p.a),
                b_block: block(&b_spec, p.b),
                out_block: block(&o_spec, p.out),
                weights: store.value(p.weight).data().to_vec(),
            })
            .collect();
        let a_rows = random_rows(&mut rng, &a_spec, 5);
        let b_rows = random_rows(&mut rng, &b_spec, 5);
        let mut tape = Tape::new();
        let a = IrrepBatch::from_steerable(&mut tape, &a_rows).unwrap();
        let b = IrrepBatch::from_steerable(&mut tape, &b_rows).unwrap();
        let out = tp.forward(&mut tape, &store, &a, &b).unwrap().to_steerable(&tape);
        let bias = store.value(tp.bias.unwrap()).data().to_vec();
        for r in 0..5 {
            let mut expect = cg_tensor_product(&a_rows[r], &b_rows[r], &o_spec, &ref_paths).unwrap();
            for (k, bv) in bias.iter().enumerate() {
                expect.data_mut()[k] += bv;
            }
            assert!(out[r].max_abs_diff(&expect) < 1e-12);
        }
    }

    #[test]
    fn equivariant_with_reflections() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a_spec: IrrepSpec = "4x0e+3x1o".parse().unwrap();
        let b_spec: IrrepSpec = "1x0e+1x1o".parse().unwrap();
        let o_spec: IrrepSpec = "5x0e+2x1o+2x1e".parse().unwrap();
        let mut store = ParamStore::new();
        let tp = TensorProduct::new(&mut store, &mut rng, "tp", &a_spec, &b_spec, &o_spec).unwrap();
        let a_rows = random_rows(&mut rng, &a_spec, 4);
        let b_rows = random_rows(&mut rng, &b_spec, 4);
        let run = |a: &[SteerableVector], b: &[SteerableVector]| {
            let mut tape = Tape::new();
            let a = IrrepBatch::from_steerable(&mut tape, a).unwrap();
            let b = IrrepBatch::from_steerable(&mut tape, b).unwrap();
            tp.forward(&mut tape, &store, &a, &b).unwrap().to_steerable(&tape)
        };
        for t in 0..20 {
            let g = if t == 0 { GroupElement::reflection_xy() } else { GroupElement::random(&mut rng, 10.0) };
            let ta: Vec<_> = a_rows.iter().map(|v| v.transform(&g).unwrap()).collect();
            let tb: Vec<_> = b_rows.iter().map(|v| v.transform(&g).unwrap()).collect();
            let lhs = run(&ta, &tb);
            let rhs: Vec<_> = run(&a_rows, &b_rows).iter().map(|v| v.transform(&g).unwrap()).collect();
            for (l, r) in lhs.iter().zip(&rhs) {
                assert!(l.max_abs_diff(r) < 1e-10);
            }
        }
    }

    #[test]
    fn unreachable_output_type_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut store = ParamStore::new();
        let r = TensorProduct::new(
            &mut store,
            &mut rng,
            "tp",
            &"2x0e".parse().unwrap(),
            &"1x0e".parse().unwrap(),
            &"1x1o".parse().unwrap(),
        );
        assert!(matches!(r, Err(Error::InvalidPath(_))));
    }
}
