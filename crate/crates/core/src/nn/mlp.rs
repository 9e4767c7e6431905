use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};

pub const DEFAULT_MLP_HIDDEN: usize = 128;

/// Dense feed-forward network with relu between layers and a linear output.
#[derive(Clone, Debug)]
pub struct Mlp {
    layers: Vec<(ParamId, ParamId)>,
    dims: Vec<usize>,
}

impl Mlp {
    /// `dims = [input, hidden..., output]`. He-normal weights, zero biases; the
    /// output layer is scaled down so initial outputs stay small.
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, name: &str, dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad layer sizes {dims:?}")));
        }
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let gain = if k == last { 0.1 } else { 2.0f64.sqrt() };
                let n = Normal::new(0.0, gain / (w[0] as f64).sqrt()).expect("finite std");
                let data = (0..w[0] * w[1]).map(|_| n.sample(rng)).collect();
                let wid = store.add(format!("{name}.fc{k}.w"), Tensor::matrix(w[0], w[1], data).expect("shape"));
                let bid = store.add(format!("{name}.fc{k}.b"), Tensor::zeros(&[1, w[1]]));
                (wid, bid)
            })
            .collect();
        Ok(Self {
            layers,
            dims: dims.to_vec(),
        })
    }

    /// Single square layer initialised to the identity map.
    pub fn identity(store: &mut ParamStore, name: &str, dim: usize) -> Self {
        let w = store.add(format!("{name}.fc0.w"), Tensor::identity(dim));
        let b = store.add(format!("{name}.fc0.b"), Tensor::zeros(&[1, dim]));
        Self {
            layers: vec![(w, b)],
            dims: vec![dim, dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("nonempty")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `x: [batch, input_dim]` to `[batch, output_dim]`.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let cols = tape.value(x).cols();
        if cols != self.input_dim() {
            return Err(Error::Shape {
                op: "mlp",
                lhs: tape.value(x).shape().to_vec(),
                rhs: vec![self.input_dim()],
            });
        }
        let mut h = x;
        for (k, &(w, b)) in self.layers.iter().enumerate() {
            let (wv, bv) = (tape.param(store, w), tape.param(store, b));
            let z = tape.matmul(h, wv)?;
            h = tape.add_row(z, bv)?;
            if k + 1 < self.layers.len() {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }
}

/// Evaluates the network on one flat input vector.
pub fn mlp_forward(net: &Mlp, store: &ParamStore, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != net.input_dim() {
        return Err(Error::Shape {
            op: "mlp",
            lhs: vec![input.len()],
            rhs: vec![net.input_dim()],
        });
    }
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::row(input.to_vec()));
    let y = net.forward(&mut tape, store, x)?;
    Ok(tape.value(y).data().to_vec())
}

/// MLP policy over a flattened observation: planar output padded with a zero
/// z component, then norm-clipped.
#[derive(Clone, Debug)]
pub struct MlpActor {
    pub net: Mlp,
    max_norm: f64,
}

impl MlpActor {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        input_dim: usize,
        hidden: usize,
        max_norm: f64,
    ) -> Result<Self> {
        Ok(Self {
            net: Mlp::new(store, rng, name, &[input_dim, hidden, hidden, 2])?,
            max_norm,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }

    /// `[batch, input_dim]` to `[batch, 3]`.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let rows = tape.value(x).rows();
        let xy = self.net.forward(tape, store, x)?;
        let z = tape.constant(Tensor::zeros(&[rows, 1]));
        let a = tape.concat(&[xy, z])?;
        tape.clip_norm_rows(a, self.max_norm)
    }
}

/// MLP Q function over a flattened state-action vector.
#[derive(Clone, Debug)]
pub struct MlpCritic {
    pub net: Mlp,
}

impl MlpCritic {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, name: &str, input_dim: usize, hidden: usize) -> Result<Self> {
        Ok(Self {
            net: Mlp::new(store, rng, name, &[input_dim, hidden, hidden, 1])?,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        self.net.forward(tape, store, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_layer_passes_input_through() {
        let mut store = ParamStore::new();
        let net = Mlp::identity(&mut store, "id", 4);
        let x = [0.5, -1.0, 2.0, 0.0];
        assert_eq!(mlp_forward(&net, &store, &x).unwrap(), x);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::new(&mut store, &mut rng, "m", &[3, DEFAULT_MLP_HIDDEN, 2]).unwrap();
        assert_eq!(net.dims()[1], 128);
        assert!(matches!(mlp_forward(&net, &store, &[1.0; 4]), Err(Error::Shape { .. })));
    }

    #[test]
    fn actor_output_is_planar_and_bounded() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let actor = MlpActor::new(&mut store, &mut rng, "a", 5, 16, 1.0).unwrap();
        for w in store.ids().collect::<Vec<_>>() {
            store.value_mut(w).data_mut().iter_mut().for_each(|v| *v *= 50.0);
        }
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::matrix(2, 5, (0..10).map(|i| i as f64 - 4.0).collect()).unwrap());
        let a = actor.forward(&mut tape, &store, x).unwrap();
        for r in 0..2 {
            let row = tape.value(a).row_slice(r);
            assert_eq!(row[2], 0.0);
            assert!((row[0] * row[0] + row[1] * row[1]).sqrt() <= 1.0 + 1e-12);
        }
    }
}
