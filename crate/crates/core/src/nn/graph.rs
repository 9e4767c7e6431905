use std::sync::Arc;

use super::features::IrrepBatch;
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::group::{self, sh_spec, spherical_harmonics_l1_or_zero, GroupElement, IrrepSpec, SteerableVector, Vec3};

/// Vertices with 3D positions, directed edges and steerable features.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanGraph {
    pub positions: Vec<Vec3>,
    pub edges: Vec<(usize, usize)>,
    pub node_features: Vec<SteerableVector>,
    pub node_attributes: Vec<SteerableVector>,
    pub edge_attributes: Vec<SteerableVector>,
}

fn shared_spec<'a>(what: &str, vs: &'a [SteerableVector]) -> Result<Option<&'a IrrepSpec>> {
    let Some(first) = vs.first() else { return Ok(None) };
    if vs.iter().any(|v| v.spec() != first.spec()) {
        return Err(Error::Spec(format!("{what} do not share one spec")));
    }
    Ok(Some(first.spec()))
}

impl EuclideanGraph {
    pub fn new(
        positions: Vec<Vec3>,
        edges: Vec<(usize, usize)>,
        node_features: Vec<SteerableVector>,
        node_attributes: Vec<SteerableVector>,
        edge_attributes: Vec<SteerableVector>,
    ) -> Result<Self> {
        let g = Self {
            positions,
            edges,
            node_features,
            node_attributes,
            edge_attributes,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if n == 0 {
            return Err(Error::InvalidArgument("graph without vertices".into()));
        }
        if self.node_features.len() != n || self.node_attributes.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{n} vertices but {} features and {} attributes",
                self.node_features.len(),
                self.node_attributes.len()
            )));
        }
        if self.edge_attributes.len() != self.edges.len() {
            return Err(Error::InvalidArgument("one edge attribute per edge required".into()));
        }
        for &(u, v) in &self.edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!("edge ({u},{v}) out of range for {n} vertices")));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at vertex {u}")));
            }
        }
        shared_spec("node features", &self.node_features)?;
        shared_spec("node attributes", &self.node_attributes)?;
        shared_spec("edge attributes", &self.edge_attributes)?;
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn feature_spec(&self) -> &IrrepSpec {
        self.node_features[0].spec()
    }

    /// Positions move by the full element, every steerable quantity by its
    /// representation; connectivity is untouched.
    pub fn transform(&self, g: &GroupElement) -> Result<Self> {
        let tr = |vs: &[SteerableVector]| vs.iter().map(|v| v.transform(g)).collect::<Result<Vec<_>>>();
        Ok(Self {
            positions: self.positions.iter().map(|x| g.apply_point(x)).collect(),
            edges: self.edges.clone(),
            node_features: tr(&self.node_features)?,
            node_attributes: tr(&self.node_attributes)?,
            edge_attributes: tr(&self.edge_attributes)?,
        })
    }

    /// Same graph with new node features (positions and connectivity unchanged).
    pub fn with_features(&self, node_features: Vec<SteerableVector>) -> Result<Self> {
        let g = Self {
            node_features,
            ..self.clone()
        };
        g.validate()?;
        Ok(g)
    }
}

/// Disjoint union of graphs, flattened for batched message passing.
///
/// Holds geometry and fixed attributes only; node features enter the network
/// separately so they can carry gradients (e.g. actions from an actor).
#[derive(Clone, Debug)]
pub struct GraphBatch {
    num_graphs: usize,
    num_nodes: usize,
    node_offsets: Vec<usize>,
    src: Arc<[usize]>,
    dst: Arc<[usize]>,
    graph_of_node: Arc<[usize]>,
    inv_in_degree: Tensor,
    inv_graph_size: Tensor,
    sh: Vec<f64>,
    edge_attr_spec: IrrepSpec,
    edge_attr: Vec<f64>,
    node_attr_spec: IrrepSpec,
    node_attr: Vec<f64>,
}

/// One graph's structure in raw form, as produced by the graph builders.
#[derive(Clone, Debug)]
pub struct GraphParts<'a> {
    pub positions: &'a [Vec3],
    pub edges: &'a [(usize, usize)],
    /// Row-major `[vertices, node_attr_spec.dim()]`.
    pub node_attr: &'a [f64],
    /// Row-major `[edges, edge_attr_spec.dim()]`.
    pub edge_attr: &'a [f64],
}

/// Tape-resident geometry of a [`GraphBatch`].
#[derive(Clone, Debug)]
pub struct GraphInputs {
    pub sh: Option<IrrepBatch>,
    pub edge_attr: Option<IrrepBatch>,
    pub node_attr: IrrepBatch,
    pub inv_in_degree: Var,
}

impl GraphBatch {
    pub fn from_parts(parts: &[GraphParts<'_>], node_attr_spec: &IrrepSpec, edge_attr_spec: &IrrepSpec) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("empty graph batch".into()));
        }
        let (nd, ed) = (node_attr_spec.dim(), edge_attr_spec.dim());
        let mut b = GraphBatch {
            num_graphs: parts.len(),
            num_nodes: 0,
            node_offsets: Vec::with_capacity(parts.len() + 1),
            src: Arc::from(Vec::new()),
            dst: Arc::from(Vec::new()),
            graph_of_node: Arc::from(Vec::new()),
            inv_in_degree: Tensor::zeros(&[1, 1]),
            inv_graph_size: Tensor::zeros(&[1, 1]),
            sh: Vec::new(),
            edge_attr_spec: edge_attr_spec.clone(),
            edge_attr: Vec::new(),
            node_attr_spec: node_attr_spec.clone(),
            node_attr: Vec::new(),
        };
        let (mut src, mut dst, mut gon, mut inv_size) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (gi, p) in parts.iter().enumerate() {
            let n = p.positions.len();
            if n == 0 {
                return Err(Error::InvalidArgument(format!("graph {gi} has no vertices")));
            }
            if p.node_attr.len() != n * nd || p.edge_attr.len() != p.edges.len() * ed {
                return Err(Error::Spec(format!("graph {gi}: attribute buffers do not match specs")));
            }
            let off = b.num_nodes;
            b.node_offsets.push(off);
            for &(u, v) in p.edges {
                if u >= n || v >= n || u == v {
                    return Err(Error::InvalidArgument(format!("graph {gi}: bad edge ({u},{v})")));
                }
                src.push(off + u);
                dst.push(off + v);
                let sh = spherical_harmonics_l1_or_zero(&group::sub(&p.positions[u], &p.positions[v]));
                b.sh.extend_from_slice(sh.data());
            }
            b.node_attr.extend_from_slice(p.node_attr);
            b.edge_attr.extend_from_slice(p.edge_attr);
            gon.extend(std::iter::repeat_n(gi, n));
            inv_size.push(1.0 / n as f64);
            b.num_nodes += n;
        }
        b.node_offsets.push(b.num_nodes);
        let mut indeg = vec![0usize; b.num_nodes];
        for &v in &dst {
            indeg[v] += 1;
        }
        b.inv_in_degree = Tensor::column(indeg.iter().map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 }).collect());
        b.inv_graph_size = Tensor::column(inv_size);
        b.src = src.into();
        b.dst = dst.into();
        b.graph_of_node = gon.into();
        Ok(b)
    }

    /// Batches full graphs and returns their node features as one flat buffer.
    pub fn from_graphs(graphs: &[&EuclideanGraph]) -> Result<(Self, IrrepSpec, Vec<f64>)> {
        let first = graphs.first().ok_or_else(|| Error::InvalidArgument("empty graph batch".into()))?;
        first.validate()?;
        let fspec = first.feature_spec().clone();
        let nspec = first.node_attributes[0].spec().clone();
        let espec = first
            .edge_attributes
            .first()
            .map(|v| v.spec().clone())
            .or_else(|| graphs.iter().find_map(|g| g.edge_attributes.first().map(|v| v.spec().clone())))
            .unwrap_or_else(|| IrrepSpec::single(1, crate::group::Irrep::VECTOR));
        let mut bufs = Vec::with_capacity(graphs.len());
        let mut feats = Vec::new();
        for g in graphs {
            g.validate()?;
            if g.feature_spec() != &fspec || g.node_attributes[0].spec() != &nspec {
                return Err(Error::Spec("graphs in a batch must share specs".into()));
            }
            if g.edge_attributes.iter().any(|e| e.spec() != &espec) {
                return Err(Error::Spec("graphs in a batch must share edge specs".into()));
            }
            let na: Vec<f64> = g.node_attributes.iter().flat_map(|v| v.data().iter().copied()).collect();
            let ea: Vec<f64> = g.edge_attributes.iter().flat_map(|v| v.data().iter().copied()).collect();
            feats.extend(g.node_features.iter().flat_map(|v| v.data().iter().copied()));
            bufs.push((na, ea));
        }
        let parts: Vec<GraphParts<'_>> = graphs
            .iter()
            .zip(&bufs)
            .map(|(g, (na, ea))| GraphParts {
                positions: &g.positions,
                edges: &g.edges,
                node_attr: na,
                edge_attr: ea,
            })
            .collect();
        Ok((Self::from_parts(&parts, &nspec, &espec)?, fspec, feats))
    }

    pub fn num_graphs(&self) -> usize {
        self.num_graphs
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }

    /// Global index of vertex `local` in graph `graph`.
    pub fn node_index(&self, graph: usize, local: usize) -> Result<usize> {
        let (lo, hi) = (self.node_offsets[graph], self.node_offsets[graph + 1]);
        if local >= hi - lo {
            return Err(Error::InvalidArgument(format!("vertex {local} not in graph {graph} of size {}", hi - lo)));
        }
        Ok(lo + local)
    }

    pub fn src(&self) -> &Arc<[usize]> {
        &self.src
    }

    pub fn dst(&self) -> &Arc<[usize]> {
        &self.dst
    }

    pub fn graph_of_node(&self) -> &Arc<[usize]> {
        &self.graph_of_node
    }

    pub fn inv_graph_size(&self) -> &Tensor {
        &self.inv_graph_size
    }

    pub fn node_attr_spec(&self) -> &IrrepSpec {
        &self.node_attr_spec
    }

    pub fn edge_attr_spec(&self) -> &IrrepSpec {
        &self.edge_attr_spec
    }

    pub fn to_tape(&self, tape: &mut Tape) -> Result<GraphInputs> {
        let e = self.num_edges();
        let (sh, edge_attr) = if e == 0 {
            (None, None)
        } else {
            (
                Some(IrrepBatch::from_flat(tape, &sh_spec(), e, &self.sh)?),
                Some(IrrepBatch::from_flat(tape, &self.edge_attr_spec, e, &self.edge_attr)?),
            )
        };
        Ok(GraphInputs {
            sh,
            edge_attr,
            node_attr: IrrepBatch::from_flat(tape, &self.node_attr_spec, self.num_nodes, &self.node_attr)?,
            inv_in_degree: tape.constant(self.inv_in_degree.clone()),
        })
    }
}
