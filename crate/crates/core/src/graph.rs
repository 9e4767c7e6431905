//! Conversion of navigation states, state-action pairs and observations into
//! Euclidean graphs, both one at a time and batched onto a tape.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor, Var, NORM_EPS};
use crate::envs::{Observation, PointCloudState};
use crate::error::{Error, Result};
use crate::group::{self, Irrep, IrrepSpec, SteerableVector, Vec3};
use crate::nn::{Channels, EuclideanGraph, GraphBatch, GraphParts, IrrepBatch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeMode {
    Complete,
    Knn(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub edge_mode: EdgeMode,
    pub include_actions: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            edge_mode: EdgeMode::Complete,
            include_actions: true,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self, num_vertices: usize) -> Result<()> {
        if let EdgeMode::Knn(k) = self.edge_mode {
            if k == 0 || k >= num_vertices {
                return Err(Error::InvalidArgument(format!("knn degree {k} needs 1 <= k < {num_vertices}")));
            }
        }
        Ok(())
    }

    /// Message-passing edges `(source, target)`.
    ///
    /// In knn mode every vertex receives messages from its own `k` nearest
    /// neighbours, i.e. the [`knn_edges`] list reversed.
    pub fn edges(&self, positions: &[Vec3]) -> Result<Vec<(usize, usize)>> {
        self.validate(positions.len())?;
        Ok(match self.edge_mode {
            EdgeMode::Complete => complete_edges(positions.len()),
            EdgeMode::Knn(k) => knn_edges(positions, k)?.into_iter().map(|(u, v)| (v, u)).collect(),
        })
    }
}

/// All ordered pairs `u != v`, sorted.
pub fn complete_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))).collect()
}

/// Directed edges from each vertex to its `k` nearest neighbours; ties go to
/// the lower vertex id.
pub fn knn_edges(positions: &[Vec3], k: usize) -> Result<Vec<(usize, usize)>> {
    let n = positions.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("knn degree {k} needs 1 <= k < {n}")));
    }
    let mut edges = Vec::with_capacity(n * k);
    for u in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&v| v != u)
            .map(|v| (group::norm(&group::sub(&positions[v], &positions[u])), v))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        edges.extend(others[..k].iter().map(|&(_, v)| (u, v)));
    }
    Ok(edges)
}

fn eps_norm(v: &Vec3) -> f64 {
    (group::dot(v, v) + NORM_EPS).sqrt()
}

/// Node features of state(-action) graphs: `[v, ‖v‖, a, ‖a‖, type]`, or
/// `[v, ‖v‖, type]` without actions.
pub fn state_feature_spec(include_actions: bool) -> IrrepSpec {
    let (v, s) = (Irrep::VECTOR, Irrep::SCALAR);
    let mut blocks = vec![(1, v), (1, s)];
    if include_actions {
        blocks.extend([(1, v), (1, s)]);
    }
    blocks.push((2, s));
    IrrepSpec::new(blocks).expect("positive")
}

/// Entity-type one-hot `[agent, landmark]`.
pub fn state_attr_spec() -> IrrepSpec {
    IrrepSpec::single(2, Irrep::SCALAR)
}

/// Observation node features: `[v, ‖v‖, agent, landmark, self]`.
pub fn observation_feature_spec() -> IrrepSpec {
    IrrepSpec::new(vec![(1, Irrep::VECTOR), (1, Irrep::SCALAR), (3, Irrep::SCALAR)]).expect("positive")
}

/// `[agent, landmark, self]` one-hot.
pub fn observation_attr_spec() -> IrrepSpec {
    IrrepSpec::single(3, Irrep::SCALAR)
}

/// Relative position `x_u - x_v` of each edge.
pub fn edge_attr_spec() -> IrrepSpec {
    IrrepSpec::single(1, Irrep::VECTOR)
}

fn edge_attributes(positions: &[Vec3], edges: &[(usize, usize)]) -> Vec<SteerableVector> {
    edges
        .iter()
        .map(|&(u, v)| {
            SteerableVector::new(edge_attr_spec(), group::sub(&positions[u], &positions[v]).to_vec()).expect("dim 3")
        })
        .collect()
}

/// One vertex per entity (agents first), complete or knn connectivity.
pub fn build_state_action_graph(
    state: &PointCloudState,
    action: Option<&[Vec3]>,
    cfg: &GraphConfig,
) -> Result<EuclideanGraph> {
    let action = match (cfg.include_actions, action) {
        (true, Some(a)) if a.len() == state.num_agents => Some(a),
        (true, Some(a)) => {
            return Err(Error::InvalidArgument(format!(
                "{} actions for {} agents",
                a.len(),
                state.num_agents
            )))
        }
        (true, None) => return Err(Error::InvalidArgument("state-action graph needs actions".into())),
        (false, _) => None,
    };
    let fspec = state_feature_spec(cfg.include_actions);
    let n = state.num_entities();
    let mut feats = Vec::with_capacity(n);
    let mut attrs = Vec::with_capacity(n);
    for v in 0..n {
        let vel = state.velocities[v];
        let mut d = vel.to_vec();
        d.push(eps_norm(&vel));
        if let Some(a) = action {
            let av = if v < state.num_agents { a[v] } else { [0.0; 3] };
            d.extend_from_slice(&av);
            d.push(eps_norm(&av));
        }
        let ty = state.kind(v).one_hot();
        d.extend_from_slice(&ty);
        feats.push(SteerableVector::new(fspec.clone(), d)?);
        attrs.push(SteerableVector::new(state_attr_spec(), ty.to_vec())?);
    }
    let edges = cfg.edges(&state.positions)?;
    EuclideanGraph::new(
        state.positions.clone(),
        edges.clone(),
        feats,
        attrs,
        edge_attributes(&state.positions, &edges),
    )
}

fn observation_rows(obs: &Observation) -> (Vec<f64>, Vec<f64>) {
    let od = observation_feature_spec().dim();
    let n = obs.num_entities();
    let mut feats = Vec::with_capacity(n * od);
    let mut attrs = Vec::with_capacity(n * 3);
    for v in 0..n {
        let vel = obs.velocities[v];
        let ty = obs.kind(v).one_hot();
        let tag = [ty[0], ty[1], if v == obs.agent { 1.0 } else { 0.0 }];
        feats.extend_from_slice(&vel);
        feats.push(eps_norm(&vel));
        feats.extend_from_slice(&tag);
        attrs.extend_from_slice(&tag);
    }
    (feats, attrs)
}

/// Agent-centred graph of one observation; returns the self vertex.
pub fn build_observation_graph(obs: &Observation, cfg: &GraphConfig) -> Result<(EuclideanGraph, usize)> {
    let (feats, attrs) = observation_rows(obs);
    let (fs, asp) = (observation_feature_spec(), observation_attr_spec());
    let edges = cfg.edges(&obs.rel_positions)?;
    let g = EuclideanGraph::new(
        obs.rel_positions.clone(),
        edges.clone(),
        feats.chunks(fs.dim()).map(|c| SteerableVector::new(fs.clone(), c.to_vec())).collect::<Result<_>>()?,
        attrs.chunks(asp.dim()).map(|c| SteerableVector::new(asp.clone(), c.to_vec())).collect::<Result<_>>()?,
        edge_attributes(&obs.rel_positions, &edges),
    )?;
    Ok((g, obs.agent))
}

fn flat_edge_attr(positions: &[Vec3], edges: &[(usize, usize)]) -> Vec<f64> {
    edges
        .iter()
        .flat_map(|&(u, v)| group::sub(&positions[u], &positions[v]))
        .collect()
}

/// Many observations as one graph batch; `self_nodes[k]` is the global index
/// of observation `k`'s own vertex.
#[derive(Clone, Debug)]
pub struct ObservationBatch {
    pub graphs: GraphBatch,
    pub features: Vec<f64>,
    pub self_nodes: Arc<[usize]>,
}

impl ObservationBatch {
    pub fn new(observations: &[&Observation], cfg: &GraphConfig) -> Result<Self> {
        let mut edges = Vec::with_capacity(observations.len());
        let mut attrs = Vec::with_capacity(observations.len());
        let mut features = Vec::new();
        for o in observations {
            edges.push(cfg.edges(&o.rel_positions)?);
            let (f, a) = observation_rows(o);
            features.extend(f);
            attrs.push(a);
        }
        let eattr: Vec<Vec<f64>> = observations.iter().zip(&edges).map(|(o, e)| flat_edge_attr(&o.rel_positions, e)).collect();
        let parts: Vec<GraphParts<'_>> = (0..observations.len())
            .map(|k| GraphParts {
                positions: &observations[k].rel_positions,
                edges: &edges[k],
                node_attr: &attrs[k],
                edge_attr: &eattr[k],
            })
            .collect();
        let graphs = GraphBatch::from_parts(&parts, &observation_attr_spec(), &edge_attr_spec())?;
        let self_nodes = observations
            .iter()
            .enumerate()
            .map(|(k, o)| graphs.node_index(k, o.agent))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            graphs,
            features,
            self_nodes: self_nodes.into(),
        })
    }

    pub fn feature_batch(&self, tape: &mut Tape) -> Result<IrrepBatch> {
        IrrepBatch::from_flat(tape, &observation_feature_spec(), self.graphs.num_nodes(), &self.features)
    }
}

/// Many states as one graph batch; joint actions are supplied later as a tape
/// variable so critic gradients can reach the actor.
#[derive(Clone, Debug)]
pub struct StateActionBatch {
    pub graphs: GraphBatch,
    /// `[nodes, 3]` velocity components per axis, `[nodes, 1]` speeds, `[nodes, 2]` types.
    velocity: [Tensor; 3],
    speed: Tensor,
    types: Tensor,
    /// Global node index of agent `i` of graph `b`, at position `b · N + i`.
    agent_nodes: Arc<[usize]>,
    /// `sqrt(ε)` on landmark rows: the norm of their padded zero action.
    landmark_action_norm: Tensor,
    num_agents: usize,
}

impl StateActionBatch {
    pub fn new(states: &[&PointCloudState], cfg: &GraphConfig) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::InvalidArgument("empty state batch".into()))?;
        let n_agents = first.num_agents;
        let mut edges = Vec::with_capacity(states.len());
        let mut attrs = Vec::with_capacity(states.len());
        let mut vel: [Vec<f64>; 3] = Default::default();
        let (mut speed, mut types, mut pad) = (Vec::new(), Vec::new(), Vec::new());
        for s in states {
            if s.num_agents != n_agents {
                return Err(Error::InvalidArgument("states in a batch must share the agent count".into()));
            }
            edges.push(cfg.edges(&s.positions)?);
            let mut a = Vec::with_capacity(2 * s.num_entities());
            for v in 0..s.num_entities() {
                let ty = s.kind(v).one_hot();
                a.extend_from_slice(&ty);
                types.extend_from_slice(&ty);
                for (c, col) in vel.iter_mut().enumerate() {
                    col.push(s.velocities[v][c]);
                }
                speed.push(eps_norm(&s.velocities[v]));
                pad.push(if v < n_agents { 0.0 } else { NORM_EPS.sqrt() });
            }
            attrs.push(a);
        }
        let eattr: Vec<Vec<f64>> = states.iter().zip(&edges).map(|(s, e)| flat_edge_attr(&s.positions, e)).collect();
        let parts: Vec<GraphParts<'_>> = (0..states.len())
            .map(|k| GraphParts {
                positions: &states[k].positions,
                edges: &edges[k],
                node_attr: &attrs[k],
                edge_attr: &eattr[k],
            })
            .collect();
        let graphs = GraphBatch::from_parts(&parts, &state_attr_spec(), &edge_attr_spec())?;
        let agent_nodes = (0..states.len())
            .flat_map(|b| (0..n_agents).map(move |i| (b, i)))
            .map(|(b, i)| graphs.node_index(b, i))
            .collect::<Result<Vec<_>>>()?;
        let nodes = graphs.num_nodes();
        let [vx, vy, vz] = vel;
        Ok(Self {
            velocity: [Tensor::column(vx), Tensor::column(vy), Tensor::column(vz)],
            speed: Tensor::column(speed),
            types: Tensor::matrix(nodes, 2, types)?,
            agent_nodes: agent_nodes.into(),
            landmark_action_norm: Tensor::column(pad),
            num_agents: n_agents,
            graphs,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    /// Node features with `actions: [graphs · N, 3]` rows ordered by
    /// `(graph, agent)`; `None` builds state-only features.
    pub fn feature_batch(&self, tape: &mut Tape, actions: Option<Var>) -> Result<IrrepBatch> {
        let nodes = self.graphs.num_nodes();
        let v: Vec<Var> = self.velocity.iter().map(|t| tape.constant(t.clone())).collect();
        let speed = tape.constant(self.speed.clone());
        let types = tape.constant(self.types.clone());
        let mut out = IrrepBatch::new(nodes);
        match actions {
            None => {
                out.insert(Irrep::SCALAR, 3, Channels::Scalar(tape.concat(&[speed, types])?));
                out.insert(Irrep::VECTOR, 1, Channels::Vector([v[0], v[1], v[2]]));
            }
            Some(a) => {
                let shape = tape.value(a).shape().to_vec();
                if shape != [self.agent_nodes.len(), 3] {
                    return Err(Error::Shape {
                        op: "state_action_features",
                        lhs: shape,
                        rhs: vec![self.agent_nodes.len(), 3],
                    });
                }
                let mut comps = [v[0]; 3];
                for (c, out_c) in comps.iter_mut().enumerate() {
                    let col = tape.select_cols(a, Arc::from(vec![c]))?;
                    let placed = tape.scatter_add_rows(col, self.agent_nodes.clone(), nodes)?;
                    *out_c = tape.concat(&[v[c], placed])?;
                }
                let an = tape.l2_norm_rows(a, NORM_EPS)?;
                let placed = tape.scatter_add_rows(an, self.agent_nodes.clone(), nodes)?;
                let pad = tape.constant(self.landmark_action_norm.clone());
                let anorm = tape.add(placed, pad)?;
                out.insert(Irrep::SCALAR, 4, Channels::Scalar(tape.concat(&[speed, anorm, types])?));
                out.insert(Irrep::VECTOR, 2, Channels::Vector(comps));
            }
        }
        Ok(out)
    }
}

/// Flat MLP input for one observation: own velocity, optional absolute
/// position, then every other entity's relative position (agents first).
pub fn flatten_observation(obs: &Observation) -> Vec<f64> {
    let mut x = obs.velocities[obs.agent].to_vec();
    if let Some(p) = obs.absolute_position {
        x.extend_from_slice(&p);
    }
    for (v, p) in obs.rel_positions.iter().enumerate() {
        if v != obs.agent {
            x.extend_from_slice(p);
        }
    }
    x
}

pub fn flat_observation_dim(num_agents: usize, num_landmarks: usize, absolute: bool) -> usize {
    3 + if absolute { 3 } else { 0 } + 3 * (num_agents + num_landmarks - 1)
}

/// Flat MLP input for a state: position and velocity of every entity.
pub fn flatten_state(state: &PointCloudState) -> Vec<f64> {
    state
        .positions
        .iter()
        .zip(&state.velocities)
        .flat_map(|(p, v)| p.iter().chain(v.iter()).copied())
        .collect()
}

pub fn flat_state_dim(num_entities: usize) -> usize {
    6 * num_entities
}

/// `[B, flat_state | a_1 | ... | a_N]` from constant states and
/// `actions: [B · N, 3]` rows ordered by `(graph, agent)`.
pub fn flat_state_action(tape: &mut Tape, states: &[&PointCloudState], actions: Var) -> Result<Var> {
    let b = states.len();
    let n = states.first().map(|s| s.num_agents).unwrap_or(0);
    let rows: Vec<Vec<f64>> = states.iter().map(|s| flatten_state(s)).collect();
    let sv = tape.constant(Tensor::from_rows(&rows)?);
    let mut parts = vec![sv];
    for i in 0..n {
        let idx: Arc<[usize]> = (0..b).map(|k| k * n + i).collect();
        parts.push(tape.gather_rows(actions, idx)?);
    }
    tape.concat(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{nav_observe, nav_reset, NavConfig};

    #[test]
    fn knn_collinear_example() {
        let p = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]];
        assert_eq!(knn_edges(&p, 1).unwrap(), vec![(0, 1), (1, 0), (2, 1)]);
        assert!(knn_edges(&p, 3).is_err());
        assert!(knn_edges(&p, 0).is_err());
    }

    #[test]
    fn knn_ties_break_by_id() {
        let p = [[0.0; 3], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]];
        assert_eq!(knn_edges(&p, 1).unwrap()[0], (0, 1));
    }

    #[test]
    fn full_knn_is_complete() {
        let s = nav_reset(3, 1).unwrap();
        let mut e = knn_edges(&s.positions, 5).unwrap();
        e.sort();
        assert_eq!(e, complete_edges(6));
    }

    #[test]
    fn state_action_graph_shape() {
        let s = nav_reset(3, 2).unwrap();
        let a = vec![[0.1, 0.2, 0.0]; 3];
        let g = build_state_action_graph(&s, Some(&a), &GraphConfig::default()).unwrap();
        assert_eq!(g.num_vertices(), 6);
        assert_eq!(g.edges.len(), 30);
        for v in 3..6 {
            let d = g.node_features[v].data();
            assert_eq!(&d[4..7], &[0.0; 3]);
            assert!(d[7] <= 1e-6);
        }
        assert!(build_state_action_graph(&s, None, &GraphConfig::default()).is_err());
        assert!(build_state_action_graph(&s, Some(&a[..2]), &GraphConfig::default()).is_err());
    }

    #[test]
    fn knn_observation_graph_in_degree() {
        let cfg = GraphConfig {
            edge_mode: EdgeMode::Knn(2),
            include_actions: false,
        };
        let s = nav_reset(3, 3).unwrap();
        let o = nav_observe(&NavConfig::new(3), &s, 0).unwrap();
        let (g, me) = build_observation_graph(&o, &cfg).unwrap();
        assert_eq!(me, 0);
        for v in 0..6 {
            assert_eq!(g.edges.iter().filter(|e| e.1 == v).count(), 2);
        }
    }

    #[test]
    fn batched_features_match_single_graphs() {
        let cfg = GraphConfig::default();
        let states: Vec<PointCloudState> = (0..3).map(|k| nav_reset(2, k).unwrap()).collect();
        let acts: Vec<Vec<Vec3>> = (0..3).map(|k| vec![[0.1 * k as f64, -0.2, 0.0], [0.0, 0.3, 0.0]]).collect();
        let refs: Vec<&PointCloudState> = states.iter().collect();
        let sab = StateActionBatch::new(&refs, &cfg).unwrap();
        let mut tape = Tape::new();
        let flat: Vec<f64> = acts.iter().flatten().flat_map(|a| a.iter().copied()).collect();
        let av = tape.constant(Tensor::matrix(6, 3, flat).unwrap());
        let f = sab.feature_batch(&mut tape, Some(av)).unwrap().to_steerable(&tape);
        let mut row = 0;
        for (s, a) in states.iter().zip(&acts) {
            let g = build_state_action_graph(s, Some(a), &cfg).unwrap();
            let (b, _, feats) = GraphBatch::from_graphs(&[&g]).unwrap();
            let mut t2 = Tape::new();
            let single = IrrepBatch::from_flat(&mut t2, g.feature_spec(), b.num_nodes(), &feats).unwrap().to_steerable(&t2);
            for v in single {
                assert!(v.max_abs_diff(&f[row]) < 1e-15);
                row += 1;
            }
        }
    }

    #[test]
    fn flat_sizes() {
        let cfg = NavConfig::new(3);
        let s = nav_reset(3, 0).unwrap();
        let o = nav_observe(&cfg, &s, 2).unwrap();
        assert_eq!(flatten_observation(&o).len(), flat_observation_dim(3, 3, false));
        assert_eq!(flatten_state(&s).len(), flat_state_dim(6));
    }
}
