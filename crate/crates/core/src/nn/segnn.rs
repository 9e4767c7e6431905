use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::e3mp::E3mpLayer;
use super::features::{Channels, IrrepBatch};
use super::graph::{EuclideanGraph, GraphBatch, GraphInputs};
use crate::autodiff::{ParamId, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::group::{Irrep, IrrepSpec, Vec3};

/// Hidden width used when none is configured.
pub const DEFAULT_HIDDEN: &str = "32x0e+8x1o";
pub const DEFAULT_LAYERS: usize = 2;

/// Specs shared by a stack of layers.
#[derive(Clone, Debug)]
pub struct SegnnSpec {
    pub input: IrrepSpec,
    pub node_attr: IrrepSpec,
    pub edge_attr: IrrepSpec,
    pub hidden: IrrepSpec,
    pub layers: usize,
}

impl SegnnSpec {
    fn build<R: Rng + ?Sized>(&self, store: &mut ParamStore, rng: &mut R, name: &str) -> Result<Vec<E3mpLayer>> {
        if self.layers == 0 {
            return Err(Error::InvalidArgument("at least one message-passing layer is required".into()));
        }
        let mut layers = Vec::with_capacity(self.layers);
        let mut spec = self.input.clone();
        for k in 0..self.layers {
            let layer = E3mpLayer::new(store, rng, &format!("{name}.l{k}"), &spec, &self.edge_attr, &self.node_attr, &self.hidden)?;
            spec = layer.out_spec().clone();
            layers.push(layer);
        }
        Ok(layers)
    }
}

fn run_layers(
    layers: &[E3mpLayer],
    tape: &mut Tape,
    store: &ParamStore,
    batch: &GraphBatch,
    inputs: &GraphInputs,
    f: &IrrepBatch,
) -> Result<IrrepBatch> {
    let mut h = f.clone();
    for layer in layers {
        h = layer.forward(tape, store, batch, inputs, &h)?;
    }
    Ok(h)
}

fn normal_tensor<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, std: f64) -> Tensor {
    let n = Normal::new(0.0, std).expect("finite std");
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| n.sample(rng)).collect()).expect("shape")
}

/// Stacked layers with an invariant readout: mean over each graph's vertices
/// of the even scalar channels, then an affine map to one value.
#[derive(Clone, Debug)]
pub struct SegnnCritic {
    spec: SegnnSpec,
    layers: Vec<E3mpLayer>,
    weight: ParamId,
    bias: ParamId,
}

const READOUT_GAIN: f64 = 0.01;

impl SegnnCritic {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, name: &str, spec: SegnnSpec) -> Result<Self> {
        let layers = spec.build(store, rng, name)?;
        let m0 = layers.last().expect("nonempty").out_spec().multiplicity_of(Irrep::SCALAR);
        if m0 == 0 {
            return Err(Error::Spec("critic readout needs even scalar channels".into()));
        }
        // Small readout so early TD targets are not dominated by initial noise.
        let weight = store.add(format!("{name}.readout.w"), normal_tensor(rng, m0, 1, READOUT_GAIN / (m0 as f64).sqrt()));
        let bias = store.add(format!("{name}.readout.b"), Tensor::zeros(&[1, 1]));
        Ok(Self { spec, layers, weight, bias })
    }

    pub fn spec(&self) -> &SegnnSpec {
        &self.spec
    }

    pub fn bias_id(&self) -> ParamId {
        self.bias
    }

    /// `[num_graphs, 1]` values.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, batch: &GraphBatch, f: &IrrepBatch) -> Result<Var> {
        let inputs = batch.to_tape(tape)?;
        let h = run_layers(&self.layers, tape, store, batch, &inputs, f)?;
        let Some((_, Channels::Scalar(s))) = h.get(Irrep::SCALAR) else {
            unreachable!("checked at construction")
        };
        let pooled = tape.scatter_add_rows(s, batch.graph_of_node().clone(), batch.num_graphs())?;
        let inv = tape.constant(batch.inv_graph_size().clone());
        let mean = tape.mul_col(pooled, inv)?;
        let w = tape.param(store, self.weight);
        let b = tape.param(store, self.bias);
        let q = tape.matmul(mean, w)?;
        tape.add_row(q, b)
    }
}

/// Stacked layers with an equivariant readout: the designated vertex's polar
/// vector channels, linearly mixed (no bias) into one vector, norm-clipped.
#[derive(Clone, Debug)]
pub struct SegnnActor {
    spec: SegnnSpec,
    layers: Vec<E3mpLayer>,
    weight: ParamId,
    max_norm: f64,
}

impl SegnnActor {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        spec: SegnnSpec,
        max_norm: f64,
    ) -> Result<Self> {
        if !(max_norm > 0.0) {
            return Err(Error::InvalidArgument(format!("action norm bound must be positive, got {max_norm}")));
        }
        let layers = spec.build(store, rng, name)?;
        let m1 = layers.last().expect("nonempty").out_spec().multiplicity_of(Irrep::VECTOR);
        if m1 == 0 {
            return Err(Error::Spec("actor readout needs polar vector channels".into()));
        }
        let weight = store.add(format!("{name}.readout.w"), normal_tensor(rng, m1, 1, (1.0 / m1 as f64).sqrt()));
        Ok(Self {
            spec,
            layers,
            weight,
            max_norm,
        })
    }

    pub fn spec(&self) -> &SegnnSpec {
        &self.spec
    }

    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }

    /// `[selected.len(), 3]` actions for the global vertex indices in `selected`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &GraphBatch,
        f: &IrrepBatch,
        selected: &Arc<[usize]>,
    ) -> Result<Var> {
        if let Some(&bad) = selected.iter().find(|&&v| v >= batch.num_nodes()) {
            return Err(Error::InvalidArgument(format!("self vertex {bad} out of range")));
        }
        let inputs = batch.to_tape(tape)?;
        let h = run_layers(&self.layers, tape, store, batch, &inputs, f)?;
        let Some((_, Channels::Vector(v))) = h.get(Irrep::VECTOR) else {
            unreachable!("checked at construction")
        };
        let w = tape.param(store, self.weight);
        let mut comps = [v[0]; 3];
        for (c, out) in comps.iter_mut().enumerate() {
            let picked = tape.gather_rows(v[c], selected.clone())?;
            *out = tape.matmul(picked, w)?;
        }
        let raw = tape.concat(&comps)?;
        tape.clip_norm_rows(raw, self.max_norm)
    }
}

fn single_graph(graph: &EuclideanGraph, tape: &mut Tape) -> Result<(GraphBatch, IrrepBatch)> {
    let (batch, fspec, feats) = GraphBatch::from_graphs(&[graph])?;
    let f = IrrepBatch::from_flat(tape, &fspec, batch.num_nodes(), &feats)?;
    Ok((batch, f))
}

/// Q value of one state-action graph.
pub fn critic_forward(critic: &SegnnCritic, store: &ParamStore, graph: &EuclideanGraph) -> Result<f64> {
    let mut tape = Tape::new();
    let (batch, f) = single_graph(graph, &mut tape)?;
    let q = critic.forward(&mut tape, store, &batch, &f)?;
    tape.value(q).item()
}

/// Action of the agent sitting at `self_vertex` of an observation graph.
pub fn actor_forward(actor: &SegnnActor, store: &ParamStore, graph: &EuclideanGraph, self_vertex: usize) -> Result<Vec3> {
    if self_vertex >= graph.num_vertices() {
        return Err(Error::InvalidArgument(format!(
            "self vertex {self_vertex} not in graph of {} vertices",
            graph.num_vertices()
        )));
    }
    let mut tape = Tape::new();
    let (batch, f) = single_graph(graph, &mut tape)?;
    let a = actor.forward(&mut tape, store, &batch, &f, &Arc::from(vec![self_vertex]))?;
    let d = tape.value(a).data();
    Ok([d[0], d[1], d[2]])
}
