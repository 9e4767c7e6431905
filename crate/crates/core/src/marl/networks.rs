use rand::Rng;

use super::config::{Arch, TrainingConfig};
use crate::autodiff::{ParamStore, Tape, Tensor, Var};
use crate::envs::{JointAction, Observation, PointCloudState};
use crate::error::{Error, Result};
use crate::graph::{
    edge_attr_spec, flat_observation_dim, flat_state_action, flat_state_dim, flatten_observation, observation_attr_spec,
    observation_feature_spec, state_attr_spec, state_feature_spec, GraphConfig, ObservationBatch, StateActionBatch,
};
use crate::group::Vec3;
use crate::nn::{MlpActor, MlpCritic, SegnnActor, SegnnCritic, SegnnSpec};

/// Shared decentralised policy: one network applied to every agent's own
/// observation.
#[derive(Clone, Debug)]
pub enum ActorNet {
    Mlp(MlpActor),
    Segnn(SegnnActor),
}

impl ActorNet {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, cfg: &TrainingConfig) -> Result<Self> {
        let max = cfg.env.max_action;
        Ok(match cfg.actor_arch {
            Arch::Segnn => {
                let spec = SegnnSpec {
                    input: observation_feature_spec(),
                    node_attr: observation_attr_spec(),
                    edge_attr: edge_attr_spec(),
                    hidden: cfg.hidden_spec()?,
                    layers: cfg.segnn_layers,
                };
                ActorNet::Segnn(SegnnActor::new(store, rng, "actor", spec, max)?)
            }
            Arch::Mlp => {
                let dim = flat_observation_dim(cfg.env.num_agents, cfg.env.num_landmarks, cfg.env.absolute_position_obs);
                ActorNet::Mlp(MlpActor::new(store, rng, "actor", dim, cfg.mlp_hidden, max)?)
            }
        })
    }

    pub fn arch(&self) -> Arch {
        match self {
            ActorNet::Mlp(_) => Arch::Mlp,
            ActorNet::Segnn(_) => Arch::Segnn,
        }
    }

    /// `[observations, 3]` actions.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, obs: &[&Observation], graph: &GraphConfig) -> Result<Var> {
        match self {
            ActorNet::Segnn(net) => {
                let batch = ObservationBatch::new(obs, graph)?;
                let f = batch.feature_batch(tape)?;
                net.forward(tape, store, &batch.graphs, &f, &batch.self_nodes)
            }
            ActorNet::Mlp(net) => {
                let rows: Vec<Vec<f64>> = obs.iter().map(|o| flatten_observation(o)).collect();
                if let Some(r) = rows.iter().find(|r| r.len() != net.input_dim()) {
                    return Err(Error::ArchitectureIncompatible(format!(
                        "MLP actor expects {}-dimensional observations, got {} (fixed entity count)",
                        net.input_dim(),
                        r.len()
                    )));
                }
                let x = tape.constant(Tensor::from_rows(&rows)?);
                net.forward(tape, store, x)
            }
        }
    }

    pub fn act(&self, store: &ParamStore, obs: &[&Observation], graph: &GraphConfig) -> Result<Vec<Vec3>> {
        if obs.is_empty() {
            return Ok(Vec::new());
        }
        let mut tape = Tape::new();
        let a = self.forward(&mut tape, store, obs, graph)?;
        Ok(tape.value(a).data().chunks(3).map(|c| [c[0], c[1], c[2]]).collect())
    }
}

/// Centralised Q function over the full state and joint action.
#[derive(Clone, Debug)]
pub enum CriticNet {
    Mlp(MlpCritic),
    Segnn(SegnnCritic),
}

impl CriticNet {
    pub fn new<R: Rng + ?Sized>(store: &mut ParamStore, rng: &mut R, cfg: &TrainingConfig) -> Result<Self> {
        Ok(match cfg.critic_arch {
            Arch::Segnn => {
                let spec = SegnnSpec {
                    input: state_feature_spec(true),
                    node_attr: state_attr_spec(),
                    edge_attr: edge_attr_spec(),
                    hidden: cfg.hidden_spec()?,
                    layers: cfg.segnn_layers,
                };
                CriticNet::Segnn(SegnnCritic::new(store, rng, "critic", spec)?)
            }
            Arch::Mlp => {
                let dim = flat_state_dim(cfg.env.num_entities()) + 3 * cfg.env.num_agents;
                CriticNet::Mlp(MlpCritic::new(store, rng, "critic", dim, cfg.mlp_hidden)?)
            }
        })
    }

    pub fn arch(&self) -> Arch {
        match self {
            CriticNet::Mlp(_) => Arch::Mlp,
            CriticNet::Segnn(_) => Arch::Segnn,
        }
    }

    /// `[states, 1]` values; `actions` is `[states · N, 3]` ordered by `(state, agent)`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        states: &[&PointCloudState],
        actions: Var,
        graph: &GraphConfig,
    ) -> Result<Var> {
        match self {
            CriticNet::Segnn(net) => {
                let batch = StateActionBatch::new(states, graph)?;
                let f = batch.feature_batch(tape, Some(actions))?;
                net.forward(tape, store, &batch.graphs, &f)
            }
            CriticNet::Mlp(net) => {
                let x = flat_state_action(tape, states, actions)?;
                let got = tape.value(x).cols();
                if got != net.input_dim() {
                    return Err(Error::ArchitectureIncompatible(format!(
                        "MLP critic expects {}-dimensional inputs, got {got}",
                        net.input_dim()
                    )));
                }
                net.forward(tape, store, x)
            }
        }
    }

    pub fn values(
        &self,
        store: &ParamStore,
        states: &[&PointCloudState],
        actions: &[JointAction],
        graph: &GraphConfig,
    ) -> Result<Vec<f64>> {
        if states.is_empty() {
            return Ok(Vec::new());
        }
        let mut tape = Tape::new();
        let a = tape.constant(actions_tensor(actions)?);
        let q = self.forward(&mut tape, store, states, a, graph)?;
        Ok(tape.value(q).data().to_vec())
    }
}

/// `[Σ agents, 3]` rows in `(sample, agent)` order.
pub fn actions_tensor(actions: &[JointAction]) -> Result<Tensor> {
    let data: Vec<f64> = actions.iter().flatten().flat_map(|a| a.iter().copied()).collect();
    Tensor::matrix(data.len() / 3, 3, data)
}
