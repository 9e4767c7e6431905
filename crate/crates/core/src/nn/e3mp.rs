use rand::Rng;

use super::features::IrrepBatch;
use super::gate::{gate_batch, gated_spec};
use super::graph::{EuclideanGraph, GraphBatch, GraphInputs};
use super::tensor_product::TensorProduct;
use crate::autodiff::{ParamStore, Tape};
use crate::error::{Error, Result};
use crate::group::{sh_spec, IrrepSpec};

/// One steerable message-passing layer.
///
/// Per edge `u -> v` the message is `gate(tp(f_u ⊕ e_uv, Y(x_u - x_v)))`.
/// Messages are mean-aggregated at `v`, then `f_v' = gate(tp(f_v ⊕ m_v, a_v))`.
#[derive(Clone, Debug)]
pub struct E3mpLayer {
    message: TensorProduct,
    update: TensorProduct,
    in_spec: IrrepSpec,
    hidden: IrrepSpec,
}

impl E3mpLayer {
    pub fn new<R: Rng + ?Sized>(
        store: &mut ParamStore,
        rng: &mut R,
        name: &str,
        in_spec: &IrrepSpec,
        edge_attr_spec: &IrrepSpec,
        node_attr_spec: &IrrepSpec,
        hidden: &IrrepSpec,
    ) -> Result<Self> {
        let gated = gated_spec(hidden);
        let message = TensorProduct::new(store, rng, &format!("{name}.msg"), &in_spec.concat(edge_attr_spec), &sh_spec(), &gated)?;
        let update = TensorProduct::new(store, rng, &format!("{name}.upd"), &in_spec.concat(hidden), node_attr_spec, &gated)?;
        Ok(Self {
            message,
            update,
            in_spec: in_spec.canonical(),
            hidden: hidden.canonical(),
        })
    }

    pub fn in_spec(&self) -> &IrrepSpec {
        &self.in_spec
    }

    /// Output spec (canonical order).
    pub fn out_spec(&self) -> &IrrepSpec {
        &self.hidden
    }

    pub fn tensor_products(&self) -> [&TensorProduct; 2] {
        [&self.message, &self.update]
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &GraphBatch,
        inputs: &GraphInputs,
        f: &IrrepBatch,
    ) -> Result<IrrepBatch> {
        if f.spec() != self.in_spec {
            return Err(Error::Shape {
                op: "e3mp",
                lhs: vec![f.spec().dim()],
                rhs: vec![self.in_spec.dim()],
            });
        }
        let agg = match (&inputs.sh, &inputs.edge_attr) {
            (Some(sh), Some(ea)) => {
                let fu = f.gather_rows(tape, batch.src())?;
                let a = fu.concat(tape, ea)?;
                let raw = self.message.forward(tape, store, &a, sh)?;
                let msg = gate_batch(tape, &raw)?;
                let summed = msg.scatter_add_rows(tape, batch.dst(), batch.num_nodes())?;
                summed.mul_col(tape, inputs.inv_in_degree)?
            }
            _ => IrrepBatch::zeros(tape, &self.hidden, batch.num_nodes())?,
        };
        let a = f.concat(tape, &agg)?;
        let raw = self.update.forward(tape, store, &a, &inputs.node_attr)?;
        gate_batch(tape, &raw)
    }
}

/// Runs one layer on a single graph, returning the graph with updated features.
pub fn e3mp_forward(layer: &E3mpLayer, store: &ParamStore, graph: &EuclideanGraph) -> Result<EuclideanGraph> {
    let (batch, fspec, feats) = GraphBatch::from_graphs(&[graph])?;
    let mut tape = Tape::new();
    let inputs = batch.to_tape(&mut tape)?;
    let f = IrrepBatch::from_flat(&mut tape, &fspec, batch.num_nodes(), &feats)?;
    let out = layer.forward(&mut tape, store, &batch, &inputs, &f)?;
    graph.with_features(out.to_steerable(&tape))
}
