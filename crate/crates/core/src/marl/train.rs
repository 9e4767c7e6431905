use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::buffer::{exploration_noise, ReplayBuffer, Transition};
use super::config::{Arch, TrainingConfig};
use super::learner::{stream_rng, Maddpg, STREAM_ENV, STREAM_NOISE, STREAM_REPLAY};
use super::networks::ActorNet;
use crate::autodiff::ParamStore;
use crate::envs::{heuristic_actions, nav_observe, nav_step, random_actions, sample_initial_state, JointAction, NavConfig, Observation, PointCloudState};
use crate::error::{Error, Result};
use crate::graph::{flat_observation_dim, GraphConfig};
use crate::group::Vec3;
use crate::lab::{invariancy_report, EmergenceTracker, InvariancyReport, Measure};

/// A joint policy over a batch of states, one joint action per state.
pub type Policy<'a> = dyn FnMut(&[&PointCloudState]) -> Result<Vec<JointAction>> + 'a;

fn observe_batch(env: &NavConfig, states: &[&PointCloudState]) -> Result<Vec<Observation>> {
    let mut out = Vec::new();
    for s in states {
        for i in 0..s.num_agents {
            out.push(nav_observe(env, s, i)?);
        }
    }
    Ok(out)
}

fn regroup(actions: Vec<Vec3>, states: &[&PointCloudState]) -> Vec<JointAction> {
    let mut it = actions.into_iter();
    states.iter().map(|s| it.by_ref().take(s.num_agents).collect()).collect()
}

/// Decentralised greedy execution of a shared actor.
pub fn actor_policy<'a>(
    actor: &'a ActorNet,
    store: &'a ParamStore,
    graph: GraphConfig,
    env: NavConfig,
) -> impl FnMut(&[&PointCloudState]) -> Result<Vec<JointAction>> + 'a {
    move |states| {
        let obs = observe_batch(&env, states)?;
        let refs: Vec<&Observation> = obs.iter().collect();
        Ok(regroup(actor.act(store, &refs, &graph)?, states))
    }
}

pub fn heuristic_policy(env: NavConfig) -> impl FnMut(&[&PointCloudState]) -> Result<Vec<JointAction>> {
    move |states| Ok(states.iter().map(|s| heuristic_actions(&env, s)).collect())
}

/// Uniform actions on the planar disk, drawn from its own seeded stream.
pub fn random_policy(env: NavConfig, seed: u64) -> impl FnMut(&[&PointCloudState]) -> Result<Vec<JointAction>> {
    let mut rng = stream_rng(seed, 0);
    move |states| Ok(states.iter().map(|s| random_actions(&env, s.num_agents, &mut rng)).collect())
}

/// Result of greedy rollouts on fixed seeds.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub returns: Vec<f64>,
    pub mean: f64,
    /// One `(state, greedy joint action)` pair per episode, taken at a
    /// staggered time step; used for invariancy measures.
    pub samples: Vec<(PointCloudState, JointAction)>,
}

/// Initial state of evaluation episode `k`.
pub fn eval_initial_state(env: &NavConfig, seed: u64, k: usize) -> Result<PointCloudState> {
    sample_initial_state(env, &mut stream_rng(seed, k as u64))
}

/// Runs `episodes` episodes in lockstep; episode `k` starts from
/// [`eval_initial_state`]`(env, seed, k)`.
pub fn evaluate(env: &NavConfig, policy: &mut Policy, episodes: usize, seed: u64) -> Result<Evaluation> {
    env.validate()?;
    if episodes == 0 {
        return Err(Error::InvalidArgument("evaluation needs at least one episode".into()));
    }
    let mut states = (0..episodes)
        .map(|k| eval_initial_state(env, seed, k))
        .collect::<Result<Vec<_>>>()?;
    let mut returns = vec![0.0; episodes];
    let mut samples = vec![None; episodes];
    for t in 0..env.episode_length {
        let refs: Vec<&PointCloudState> = states.iter().collect();
        let actions = policy(&refs)?;
        if actions.len() != episodes {
            return Err(Error::Shape {
                op: "evaluate",
                lhs: vec![episodes],
                rhs: vec![actions.len()],
            });
        }
        let mut next = Vec::with_capacity(episodes);
        for (k, (s, a)) in states.iter().zip(actions).enumerate() {
            let out = nav_step(env, s, &a)?;
            returns[k] += out.reward;
            if t == (7 * k) % env.episode_length {
                samples[k] = Some((s.clone(), a));
            }
            next.push(out.state);
        }
        states = next;
    }
    let mean = returns.iter().sum::<f64>() / episodes as f64;
    Ok(Evaluation {
        returns,
        mean,
        samples: samples.into_iter().flatten().collect(),
    })
}

/// One line of the metric log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricRow {
    pub episode: usize,
    /// Mean greedy return on the fixed evaluation episodes.
    pub ret: f64,
    /// Mean losses over the updates since the previous row (NaN if none).
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub rot_invariancy: f64,
    pub transl_invariancy: f64,
}

pub const METRICS_HEADER: &str = "episode,return,critic_loss,actor_loss,rot_invariancy,transl_invariancy";

/// One CSV line (with newline) in the column order of [`METRICS_HEADER`].
pub fn write_metrics_row<W: Write>(mut out: W, r: &MetricRow) -> Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{}",
        r.episode, r.ret, r.critic_loss, r.actor_loss, r.rot_invariancy, r.transl_invariancy
    )?;
    Ok(())
}

pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[MetricRow]) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for r in rows {
        write_metrics_row(&mut out, r)?;
    }
    Ok(())
}

pub fn save_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, rows)?;
    std::fs::write(path, buf)?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub learner: Maddpg,
    pub metrics: Vec<MetricRow>,
    pub episode_returns: Vec<f64>,
    pub invariancy: EmergenceTracker,
    pub updates: usize,
}

fn undefined_to_nan(m: Result<Measure>) -> Result<Measure> {
    match m {
        Err(Error::UndefinedMeasure(msg)) => {
            log::warn!("invariancy undefined: {msg}");
            Ok(Measure {
                value: f64::NAN,
                pairs: 0,
                skipped: 0,
            })
        }
        other => other,
    }
}

/// Greedy evaluation plus all four invariancy measures of the learner.
pub fn evaluate_learner(learner: &Maddpg) -> Result<(Evaluation, InvariancyReport)> {
    let cfg = learner.config();
    let mut policy = actor_policy(&learner.actor, &learner.actor_params, cfg.graph, cfg.env.clone());
    let eval = evaluate(&cfg.env, &mut policy, cfg.eval_episodes, cfg.eval_seed)?;
    let take = cfg.invariancy_samples.min(eval.samples.len()).max(1);
    let actor = |obs: &[Observation]| -> Result<Vec<Vec3>> {
        let refs: Vec<&Observation> = obs.iter().collect();
        learner.act(&refs)
    };
    let critic = |states: &[PointCloudState], actions: &[JointAction]| -> Result<Vec<f64>> {
        let refs: Vec<&PointCloudState> = states.iter().collect();
        learner.q_values(&refs, actions)
    };
    let report = match invariancy_report(&cfg.env, &actor, &critic, &eval.samples[..take]) {
        Ok(r) => r,
        Err(Error::UndefinedMeasure(_)) => {
            let states: Vec<PointCloudState> = eval.samples[..take].iter().map(|(s, _)| s.clone()).collect();
            InvariancyReport {
                actor_rotation: undefined_to_nan(crate::lab::actor_rotation_invariancy(&cfg.env, &actor, &states))?,
                actor_translation: undefined_to_nan(crate::lab::actor_translation_invariancy(&cfg.env, &actor, &states))?,
                critic_rotation: crate::lab::critic_rotation_invariancy(&critic, &eval.samples[..take])?,
                critic_translation: crate::lab::critic_translation_invariancy(&critic, &eval.samples[..take])?,
                num_samples: take,
                angles_deg: crate::lab::rotation_angles_deg(),
                translations: crate::lab::translation_list(crate::lab::NAV_MAP_SIZE),
            }
        }
        Err(e) => return Err(e),
    };
    Ok((eval, report))
}

/// Trains from freshly initialised networks.
pub fn maddpg_train(config: TrainingConfig, hook: &mut dyn FnMut(&MetricRow, &InvariancyReport)) -> Result<TrainOutput> {
    continue_training(Maddpg::new(config)?, hook)
}

/// Runs the configured number of episodes starting from `learner`'s current
/// parameters (used for transfer after loading a checkpoint).
pub fn continue_training(mut learner: Maddpg, hook: &mut dyn FnMut(&MetricRow, &InvariancyReport)) -> Result<TrainOutput> {
    let cfg = learner.config().clone();
    cfg.validate()?;
    let mut env_rng = stream_rng(cfg.seed, STREAM_ENV);
    let mut noise_rng = stream_rng(cfg.seed, STREAM_NOISE);
    let mut replay_rng = stream_rng(cfg.seed, STREAM_REPLAY);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
    let mut metrics = Vec::new();
    let mut tracker = EmergenceTracker::new();
    let mut episode_returns = Vec::with_capacity(cfg.episodes);
    let (mut steps, mut updates) = (0usize, 0usize);
    let (mut closs, mut aloss, mut window) = (0.0, 0.0, 0usize);

    for ep in 0..cfg.episodes {
        let scale = cfg.noise_scale(ep);
        let mut state = sample_initial_state(&cfg.env, &mut env_rng)?;
        let mut obs = observe_batch(&cfg.env, &[&state])?;
        let mut ret = 0.0;
        loop {
            let refs: Vec<&Observation> = obs.iter().collect();
            let greedy = learner.act(&refs)?;
            let action: JointAction = greedy
                .iter()
                .map(|a| exploration_noise(a, scale, cfg.env.max_action, &mut noise_rng))
                .collect();
            let out = nav_step(&cfg.env, &state, &action)?;
            let next_obs = observe_batch(&cfg.env, &[&out.state])?;
            ret += out.reward;
            buffer.push(Transition {
                state: state.clone(),
                observations: obs,
                action,
                reward: out.reward,
                next_state: out.state.clone(),
                next_observations: next_obs.clone(),
                done: out.done,
            });
            steps += 1;
            if steps >= cfg.warmup_steps && steps % cfg.update_every == 0 && buffer.len() >= cfg.batch_size {
                let batch = buffer.sample(cfg.batch_size, &mut replay_rng)?;
                let stats = learner.update(&batch)?;
                closs += stats.critic_loss;
                aloss += stats.actor_loss;
                window += 1;
                updates += 1;
            }
            state = out.state;
            obs = next_obs;
            if out.done {
                break;
            }
        }
        if !ret.is_finite() {
            return Err(Error::Divergence(format!("episode {ep} return is {ret}")));
        }
        episode_returns.push(ret);
        if (ep + 1) % cfg.eval_interval == 0 {
            let (eval, report) = evaluate_learner(&learner)?;
            let avg = |s: f64| if window > 0 { s / window as f64 } else { f64::NAN };
            let row = MetricRow {
                episode: ep + 1,
                ret: eval.mean,
                critic_loss: avg(closs),
                actor_loss: avg(aloss),
                rot_invariancy: report.actor_rotation.value,
                transl_invariancy: report.actor_translation.value,
            };
            log::info!(
                "{} episode {}: eval return {:.3}, critic loss {:.4}, actor loss {:.4}",
                cfg.label(),
                row.episode,
                row.ret,
                row.critic_loss,
                row.actor_loss
            );
            hook(&row, &report);
            metrics.push(row);
            tracker.record(ep + 1, report);
            closs = 0.0;
            aloss = 0.0;
            window = 0;
        }
    }
    Ok(TrainOutput {
        learner,
        metrics,
        episode_returns,
        invariancy: tracker,
        updates,
    })
}

/// Greedy evaluation of an unmodified actor on a game with a different
/// number of agents and landmarks.
pub fn zero_shot_eval(learner: &Maddpg, env: &NavConfig, episodes: usize, seed: u64) -> Result<Evaluation> {
    env.validate()?;
    if let ActorNet::Mlp(net) = &learner.actor {
        let need = flat_observation_dim(env.num_agents, env.num_landmarks, env.absolute_position_obs);
        if need != net.input_dim() {
            return Err(Error::ArchitectureIncompatible(format!(
                "MLP actor was built for {}-dimensional observations; a game with {} agents and {} landmarks gives {need}",
                net.input_dim(),
                env.num_agents,
                env.num_landmarks
            )));
        }
    }
    let mut policy = actor_policy(&learner.actor, &learner.actor_params, learner.config().graph, env.clone());
    evaluate(env, &mut policy, episodes, seed)
}

/// Loads a checkpoint into networks configured by `config` (typically a
/// larger game) and keeps training.
pub fn transfer(checkpoint: &Path, config: TrainingConfig, hook: &mut dyn FnMut(&MetricRow, &InvariancyReport)) -> Result<TrainOutput> {
    if config.actor_arch == Arch::Mlp || config.critic_arch == Arch::Mlp {
        let saved = Maddpg::load(checkpoint)?;
        if saved.config().env.num_agents != config.env.num_agents || saved.config().env.num_landmarks != config.env.num_landmarks {
            return Err(Error::ArchitectureIncompatible(
                "MLP networks have a fixed input size and cannot change entity counts".into(),
            ));
        }
    }
    continue_training(Maddpg::load_with_config(checkpoint, config)?, hook)
}
