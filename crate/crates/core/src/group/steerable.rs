use super::element::{norm, GroupElement, Vec3};
use super::irrep::{Irrep, IrrepSpec};
use crate::error::{Error, Result};

/// A feature vector typed by an [`IrrepSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct SteerableVector {
    spec: IrrepSpec,
    data: Vec<f64>,
}

impl SteerableVector {
    pub fn new(spec: IrrepSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.dim() {
            return Err(Error::Spec(format!(
                "data length {} does not match spec {spec} (dim {})",
                data.len(),
                spec.dim()
            )));
        }
        Ok(Self { spec, data })
    }

    pub fn zeros(spec: IrrepSpec) -> Self {
        let data = vec![0.0; spec.dim()];
        Self { spec, data }
    }

    pub fn spec(&self) -> &IrrepSpec {
        &self.spec
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Direct sum `self ⊕ other`.
    pub fn concat(&self, other: &SteerableVector) -> SteerableVector {
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        SteerableVector {
            spec: self.spec.concat(&other.spec),
            data,
        }
    }

    /// Block-wise `D(g)`; translations do not act on features.
    pub fn transform(&self, g: &GroupElement) -> Result<SteerableVector> {
        let mut out = self.data.clone();
        for b in self.spec.layout() {
            let d = b.irrep.matrix(g)?;
            let n = b.irrep.dim();
            for c in 0..b.multiplicity {
                let base = b.index(c, 0);
                for i in 0..n {
                    out[base + i] = (0..n).map(|k| d.get(i, k) * self.data[base + k]).sum();
                }
            }
        }
        Ok(SteerableVector {
            spec: self.spec.clone(),
            data: out,
        })
    }

    pub fn max_abs_diff(&self, other: &SteerableVector) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `transform_steerable(v, g)`.
pub fn transform_steerable(v: &SteerableVector, g: &GroupElement) -> Result<SteerableVector> {
    v.transform(g)
}

/// Spec of the degree ≤ 1 edge embedding: `1x0e + 1x1o`.
pub fn sh_spec() -> IrrepSpec {
    IrrepSpec::new(vec![(1, Irrep::SCALAR), (1, Irrep::VECTOR)]).expect("static spec")
}

/// Unnormalised real spherical harmonics up to degree 1: `(1, x̂, ŷ, ẑ)`.
pub fn spherical_harmonics_l1(direction: &Vec3) -> Result<SteerableVector> {
    let n = norm(direction);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::DegenerateDirection);
    }
    Ok(SteerableVector {
        spec: sh_spec(),
        data: vec![1.0, direction[0] / n, direction[1] / n, direction[2] / n],
    })
}

/// Like [`spherical_harmonics_l1`] but maps a zero direction to `(1, 0, 0, 0)`,
/// the only rotation-invariant choice.
pub fn spherical_harmonics_l1_or_zero(direction: &Vec3) -> SteerableVector {
    spherical_harmonics_l1(direction).unwrap_or_else(|_| SteerableVector {
        spec: sh_spec(),
        data: vec![1.0, 0.0, 0.0, 0.0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn rand_vec(rng: &mut impl Rng) -> Vec3 {
        [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]
    }

    #[test]
    fn scalars_unchanged() {
        let v = SteerableVector::new(IrrepSpec::single(1, Irrep::SCALAR), vec![2.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = GroupElement::random(&mut rng, 5.0);
        assert_eq!(v.transform(&g).unwrap(), v);
    }

    #[test]
    fn vector_quarter_turn() {
        let v = SteerableVector::new(IrrepSpec::single(1, Irrep::VECTOR), vec![1.0, 0.0, 0.0]).unwrap();
        let w = v.transform(&GroupElement::rotation_z(FRAC_PI_2)).unwrap();
        assert!(w.max_abs_diff(&SteerableVector::new(w.spec().clone(), vec![0.0, 1.0, 0.0]).unwrap()) < 1e-15);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(SteerableVector::new(IrrepSpec::single(2, Irrep::VECTOR), vec![0.0; 5]).is_err());
    }

    #[test]
    fn l1_blocks_keep_norm_under_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec: IrrepSpec = "2x0e+3x1o+1x1e".parse().unwrap();
        for _ in 0..100 {
            let data: Vec<f64> = (0..spec.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = SteerableVector::new(spec.clone(), data).unwrap();
            let g = GroupElement::random_rotation(&mut rng);
            let w = v.transform(&g).unwrap();
            for b in spec.layout().iter().filter(|b| b.irrep.l == 1) {
                for c in 0..b.multiplicity {
                    let i = b.index(c, 0);
                    let n0: f64 = v.data()[i..i + 3].iter().map(|x| x * x).sum();
                    let n1: f64 = w.data()[i..i + 3].iter().map(|x| x * x).sum();
                    assert!((n0 - n1).abs() < 1e-12);
                }
            }
            // 0e sub-blocks are preserved exactly.
            assert_eq!(&w.data()[..2], &v.data()[..2]);
        }
    }

    #[test]
    fn sh_examples() {
        assert_eq!(spherical_harmonics_l1(&[0.0, 0.0, 5.0]).unwrap().data(), &[1.0, 0.0, 0.0, 1.0]);
        let s = spherical_harmonics_l1(&[3.0, 4.0, 0.0]).unwrap();
        assert!((s.data()[1] - 0.6).abs() < 1e-15 && (s.data()[2] - 0.8).abs() < 1e-15);
        assert!(matches!(spherical_harmonics_l1(&[0.0; 3]), Err(Error::DegenerateDirection)));
        assert_eq!(spherical_harmonics_l1_or_zero(&[0.0; 3]).data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sh_equivariant_and_scale_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let d = rand_vec(&mut rng);
            let g = GroupElement::random(&mut rng, 10.0);
            let lhs = spherical_harmonics_l1(&g.apply_vector(&d)).unwrap();
            let rhs = spherical_harmonics_l1(&d).unwrap().transform(&g).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            let k = rng.random_range(0.01..100.0);
            let scaled = spherical_harmonics_l1(&[d[0] * k, d[1] * k, d[2] * k]).unwrap();
            assert!(scaled.max_abs_diff(&spherical_harmonics_l1(&d).unwrap()) < 1e-12);
        }
    }
}
