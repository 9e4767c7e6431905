use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::Transition;
use super::config::TrainingConfig;
use super::networks::{actions_tensor, ActorNet, CriticNet};
use crate::autodiff::{Optimizer, ParamStore, Tape, Tensor, Var};
use crate::envs::{JointAction, Observation, PointCloudState};
use crate::error::{Error, Result};
use crate::group::Vec3;

pub(crate) const STREAM_INIT: u64 = 0;
pub(crate) const STREAM_ENV: u64 = 1;
pub(crate) const STREAM_NOISE: u64 = 2;
pub(crate) const STREAM_REPLAY: u64 = 3;

/// Independent deterministic random streams derived from one seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Losses of one gradient step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    label: String,
    config: TrainingConfig,
}

/// MADDPG with one shared actor, one centralised critic and their targets.
#[derive(Clone, Debug)]
pub struct Maddpg {
    config: TrainingConfig,
    pub actor: ActorNet,
    pub critic: CriticNet,
    pub actor_params: ParamStore,
    pub critic_params: ParamStore,
    pub target_actor: ParamStore,
    pub target_critic: ParamStore,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
}

fn batch_observations<'a>(batch: &[&'a Transition], next: bool) -> Vec<&'a Observation> {
    batch
        .iter()
        .flat_map(|t| if next { &t.next_observations } else { &t.observations })
        .collect()
}

fn check_finite(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Divergence(format!("{what} became {v}")))
    }
}

impl Maddpg {
    pub fn new(config: TrainingConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = stream_rng(config.seed, STREAM_INIT);
        let mut actor_params = ParamStore::new();
        let actor = ActorNet::new(&mut actor_params, &mut rng, &config)?;
        let mut critic_params = ParamStore::new();
        let critic = CriticNet::new(&mut critic_params, &mut rng, &config)?;
        Ok(Self {
            actor_opt: config.make_optimizer(config.actor_lr),
            critic_opt: config.make_optimizer(config.critic_lr),
            target_actor: actor_params.clone(),
            target_critic: critic_params.clone(),
            actor,
            critic,
            actor_params,
            critic_params,
            config,
        })
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    /// Greedy actions of the online actor.
    pub fn act(&self, obs: &[&Observation]) -> Result<Vec<Vec3>> {
        self.actor.act(&self.actor_params, obs, &self.config.graph)
    }

    /// Online critic values.
    pub fn q_values(&self, states: &[&PointCloudState], actions: &[JointAction]) -> Result<Vec<f64>> {
        self.critic.values(&self.critic_params, states, actions, &self.config.graph)
    }

    /// `y = c·r + γ (1 − done) Q'(s', μ'(o'))` with target networks and reward
    /// scale `c`; `done` is ignored when bootstrapping through time limits.
    pub fn td_targets(&self, batch: &[&Transition]) -> Result<Vec<f64>> {
        let next_obs = batch_observations(batch, true);
        let a_next = self.actor.act(&self.target_actor, &next_obs, &self.config.graph)?;
        let n = batch.first().map_or(0, |t| t.num_agents());
        let joint: Vec<JointAction> = a_next.chunks(n.max(1)).map(<[Vec3]>::to_vec).collect();
        let next_states: Vec<&PointCloudState> = batch.iter().map(|t| &t.next_state).collect();
        let q_next = self.critic.values(&self.target_critic, &next_states, &joint, &self.config.graph)?;
        Ok(batch
            .iter()
            .zip(q_next)
            .map(|(t, q)| {
                let terminal = t.done && !self.config.bootstrap_time_limit;
                td_target(self.config.reward_scale * t.reward, self.config.gamma, terminal, q)
            })
            .collect())
    }

    /// Mean squared TD error, with the online critic read from `critic_store`.
    pub fn critic_loss(&self, critic_store: &ParamStore, batch: &[&Transition]) -> Result<(Tape, Var)> {
        validate_batch(batch)?;
        let y = self.td_targets(batch)?;
        let mut tape = Tape::new();
        let states: Vec<&PointCloudState> = batch.iter().map(|t| &t.state).collect();
        let actions: Vec<JointAction> = batch.iter().map(|t| t.action.clone()).collect();
        let a = tape.constant(actions_tensor(&actions)?);
        let q = self.critic.forward(&mut tape, critic_store, &states, a, &self.config.graph)?;
        let y = tape.constant(Tensor::column(y));
        let d = tape.sub(q, y)?;
        let sq = tape.square(d);
        let loss = tape.mean(sq);
        Ok((tape, loss))
    }

    /// `−mean_i mean_b Q(s_b, a_b with agent i's action from μ(o_b^i))`, with
    /// the actor read from `actor_store`.
    pub fn actor_loss(&self, actor_store: &ParamStore, batch: &[&Transition]) -> Result<(Tape, Var)> {
        validate_batch(batch)?;
        let (b, n) = (batch.len(), batch[0].num_agents());
        let mut tape = Tape::new();
        let obs = batch_observations(batch, false);
        let policy = self.actor.forward(&mut tape, actor_store, &obs, &self.config.graph)?;
        let actions: Vec<JointAction> = batch.iter().map(|t| t.action.clone()).collect();
        let taken = actions_tensor(&actions)?;
        // Copy i of the batch (graphs i·B .. (i+1)·B) swaps in agent i's policy action.
        let rows = n * b * n;
        let mut src = Vec::with_capacity(rows);
        let mut mask = Vec::with_capacity(rows);
        let mut fixed = Vec::with_capacity(3 * rows);
        for i in 0..n {
            for k in 0..b {
                for j in 0..n {
                    src.push(k * n + j);
                    let own = i == j;
                    mask.push(if own { 1.0 } else { 0.0 });
                    let row = taken.row_slice(k * n + j);
                    fixed.extend(row.iter().map(|v| if own { 0.0 } else { *v }));
                }
            }
        }
        let picked = tape.gather_rows(policy, Arc::from(src))?;
        let m = tape.constant(Tensor::column(mask));
        let own = tape.mul_col(picked, m)?;
        let rest = tape.constant(Tensor::matrix(rows, 3, fixed)?);
        let joint = tape.add(own, rest)?;
        let states: Vec<&PointCloudState> = (0..n).flat_map(|_| batch.iter().map(|t| &t.state)).collect();
        let q = self.critic.forward(&mut tape, &self.critic_params, &states, joint, &self.config.graph)?;
        let mean = tape.mean(q);
        let loss = tape.scale(mean, -1.0);
        Ok((tape, loss))
    }

    /// Critic loss and its flat parameter gradient; nothing is modified.
    pub fn critic_gradient(&self, batch: &[&Transition]) -> Result<(f64, Vec<f64>)> {
        let mut store = self.critic_params.clone();
        store.zero_grad();
        let (tape, loss) = self.critic_loss(&store, batch)?;
        let g = tape.backward(loss)?;
        store.accumulate(&tape, &g);
        Ok((tape.value(loss).item()?, store.flat_grad()))
    }

    /// Actor loss and its flat parameter gradient; nothing is modified.
    pub fn actor_gradient(&self, batch: &[&Transition]) -> Result<(f64, Vec<f64>)> {
        let mut store = self.actor_params.clone();
        store.zero_grad();
        let (tape, loss) = self.actor_loss(&store, batch)?;
        let g = tape.backward(loss)?;
        store.accumulate(&tape, &g);
        Ok((tape.value(loss).item()?, store.flat_grad()))
    }

    /// One critic step, one actor step against the updated critic, then soft
    /// target updates.
    pub fn update(&mut self, batch: &[&Transition]) -> Result<UpdateStats> {
        let (tape, loss) = self.critic_loss(&self.critic_params, batch)?;
        let critic_loss = check_finite("critic loss", tape.value(loss).item()?)?;
        let g = tape.backward(loss)?;
        self.critic_params.accumulate(&tape, &g);
        self.critic_opt.step(&mut self.critic_params);

        let (tape, loss) = self.actor_loss(&self.actor_params, batch)?;
        let actor_loss = check_finite("actor loss", tape.value(loss).item()?)?;
        let g = tape.backward(loss)?;
        self.actor_params.accumulate(&tape, &g);
        self.actor_opt.step(&mut self.actor_params);

        let tau = self.config.tau;
        self.target_critic.soft_update_from(&self.critic_params, tau)?;
        self.target_actor.soft_update_from(&self.actor_params, tau)?;
        if self.actor_params.flat_values().iter().chain(&self.critic_params.flat_values()).any(|v| !v.is_finite()) {
            return Err(Error::Divergence("non-finite parameter after update".into()));
        }
        Ok(UpdateStats {
            critic_loss,
            actor_loss,
        })
    }

    /// Writes `actor.params`, `critic.params`, their targets and `meta.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.actor_params.save(&dir.join("actor.params"))?;
        self.critic_params.save(&dir.join("critic.params"))?;
        self.target_actor.save(&dir.join("actor_target.params"))?;
        self.target_critic.save(&dir.join("critic_target.params"))?;
        let meta = Meta {
            label: self.config.label(),
            config: self.config.clone(),
        };
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta: Meta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
        Self::load_with_config(dir, meta.config)
    }

    /// Restores parameters into networks built from `config`, which may
    /// differ from the saved one in anything that leaves the parameter
    /// layout alone (agent count for SEGNN, schedule, seeds).
    pub fn load_with_config(dir: &Path, config: TrainingConfig) -> Result<Self> {
        let mut m = Self::new(config)?;
        let load = |store: &mut ParamStore, file: &str| -> Result<()> {
            store.load_into(&dir.join(file)).map_err(|e| match e {
                Error::Shape { .. } | Error::InvalidArgument(_) => Error::ArchitectureIncompatible(format!(
                    "checkpoint {file} does not fit the configured networks: {e}"
                )),
                other => other,
            })
        };
        load(&mut m.actor_params, "actor.params")?;
        load(&mut m.critic_params, "critic.params")?;
        load(&mut m.target_actor, "actor_target.params")?;
        load(&mut m.target_critic, "critic_target.params")?;
        Ok(m)
    }
}

pub fn td_target(reward: f64, gamma: f64, done: bool, q_next: f64) -> f64 {
    reward + gamma * if done { 0.0 } else { q_next }
}

fn validate_batch(batch: &[&Transition]) -> Result<()> {
    let first = batch.first().ok_or_else(|| Error::InvalidArgument("empty batch".into()))?;
    for t in batch {
        t.validate()?;
        if t.num_agents() != first.num_agents() || t.state.num_entities() != first.state.num_entities() {
            return Err(Error::InvalidArgument("transitions in a batch must share entity counts".into()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn td_target_arithmetic() {
        assert!((td_target(1.0, 0.95, false, 2.0) - 2.9).abs() < 1e-15);
        assert_eq!(td_target(1.0, 0.95, true, 2.0), 1.0);
    }

    #[test]
    fn streams_differ() {
        use rand::Rng;
        let a: u64 = stream_rng(1, STREAM_ENV).random();
        let b: u64 = stream_rng(1, STREAM_NOISE).random();
        let c: u64 = stream_rng(1, STREAM_ENV).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
        let _ = (STREAM_INIT, STREAM_REPLAY);
    }
}
