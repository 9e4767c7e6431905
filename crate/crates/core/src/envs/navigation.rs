use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{self, clip_norm, norm, GroupElement, Vec3};

/// Physical constants and episode settings of the navigation game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavConfig {
    pub num_agents: usize,
    pub num_landmarks: usize,
    pub damping: f64,
    pub dt: f64,
    pub max_speed: f64,
    pub max_action: f64,
    pub collision_radius: f64,
    pub collision_penalty: f64,
    pub episode_length: usize,
    /// Entities spawn uniformly in `[-h, h]^2` at `z = 0`.
    pub spawn_half_width: f64,
    /// Adds the observing agent's absolute position to observations.
    pub absolute_position_obs: bool,
}

impl NavConfig {
    pub fn new(num_agents: usize) -> Self {
        Self {
            num_agents,
            num_landmarks: num_agents,
            damping: 0.25,
            dt: 0.1,
            max_speed: 1.0,
            max_action: 1.0,
            collision_radius: 0.2,
            collision_penalty: 1.0,
            episode_length: 25,
            spawn_half_width: 1.0,
            absolute_position_obs: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_agents == 0 {
            return Err(Error::InvalidArgument("navigation needs at least one agent".into()));
        }
        if self.episode_length == 0 || !(self.dt > 0.0) || !(self.max_action > 0.0) || !(self.max_speed > 0.0) {
            return Err(Error::InvalidArgument("episode length, dt, max speed and max action must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.damping) {
            return Err(Error::InvalidArgument(format!("damping {} outside [0, 1]", self.damping)));
        }
        Ok(())
    }

    pub fn num_entities(&self) -> usize {
        self.num_agents + self.num_landmarks
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntityKind {
    Agent,
    Landmark,
}

impl EntityKind {
    pub fn one_hot(self) -> [f64; 2] {
        match self {
            EntityKind::Agent => [1.0, 0.0],
            EntityKind::Landmark => [0.0, 1.0],
        }
    }
}

/// Entities as a point cloud: agents first (by index), then landmarks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloudState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub num_agents: usize,
    pub t: usize,
}

impl PointCloudState {
    pub fn num_entities(&self) -> usize {
        self.positions.len()
    }

    pub fn num_landmarks(&self) -> usize {
        self.positions.len() - self.num_agents
    }

    pub fn kind(&self, v: usize) -> EntityKind {
        if v < self.num_agents {
            EntityKind::Agent
        } else {
            EntityKind::Landmark
        }
    }

    /// `L_g`: positions by the full element, velocities by the linear part.
    pub fn transform(&self, g: &GroupElement) -> Self {
        Self {
            positions: self.positions.iter().map(|x| g.apply_point(x)).collect(),
            velocities: self.velocities.iter().map(|v| g.apply_vector(v)).collect(),
            num_agents: self.num_agents,
            t: self.t,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = |a: &[Vec3], b: &[Vec3]| {
            a.iter()
                .zip(b)
                .flat_map(|(x, y)| (0..3).map(move |k| (x[k] - y[k]).abs()))
                .fold(0.0f64, f64::max)
        };
        d(&self.positions, &other.positions).max(d(&self.velocities, &other.velocities))
    }
}

/// One force command per agent.
pub type JointAction = Vec<Vec3>;

/// `K_g`: actions are free vectors and ignore translations.
pub fn transform_action(action: &[Vec3], g: &GroupElement) -> JointAction {
    action.iter().map(|a| g.apply_vector(a)).collect()
}

/// What agent `agent` sees: every entity relative to itself, its own velocity,
/// and zeros for the velocities of everyone else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub agent: usize,
    pub num_agents: usize,
    pub rel_positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub absolute_position: Option<Vec3>,
}

impl Observation {
    pub fn num_entities(&self) -> usize {
        self.rel_positions.len()
    }

    pub fn kind(&self, v: usize) -> EntityKind {
        if v < self.num_agents {
            EntityKind::Agent
        } else {
            EntityKind::Landmark
        }
    }

    /// `H_g`: relative vectors rotate; only the optional absolute position
    /// feels the translation.
    pub fn transform(&self, g: &GroupElement) -> Self {
        Self {
            agent: self.agent,
            num_agents: self.num_agents,
            rel_positions: self.rel_positions.iter().map(|x| g.apply_vector(x)).collect(),
            velocities: self.velocities.iter().map(|v| g.apply_vector(v)).collect(),
            absolute_position: self.absolute_position.map(|p| g.apply_point(&p)),
        }
    }
}

/// Result of one environment transition.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: PointCloudState,
    pub reward: f64,
    pub done: bool,
}

fn uniform_box(rng: &mut impl Rng, h: f64) -> Vec3 {
    [rng.random_range(-h..=h), rng.random_range(-h..=h), 0.0]
}

/// Initial state drawn from `rng`: all entities uniform in the spawn box,
/// velocities zero.
pub fn sample_initial_state(cfg: &NavConfig, rng: &mut impl Rng) -> Result<PointCloudState> {
    cfg.validate()?;
    let n = cfg.num_entities();
    Ok(PointCloudState {
        positions: (0..n).map(|_| uniform_box(rng, cfg.spawn_half_width)).collect(),
        velocities: vec![[0.0; 3]; n],
        num_agents: cfg.num_agents,
        t: 0,
    })
}

/// Deterministic reset for `num_agents` agents and as many landmarks.
pub fn nav_reset(num_agents: usize, seed: u64) -> Result<PointCloudState> {
    sample_initial_state(&NavConfig::new(num_agents), &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Negative coverage distance minus the collision penalty.
pub fn nav_reward(cfg: &NavConfig, state: &PointCloudState) -> f64 {
    let n = state.num_agents;
    let mut r = 0.0;
    for l in n..state.num_entities() {
        let nearest = (0..n)
            .map(|i| norm(&group::sub(&state.positions[i], &state.positions[l])))
            .fold(f64::INFINITY, f64::min);
        r -= nearest;
    }
    let mut collisions = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if norm(&group::sub(&state.positions[i], &state.positions[j])) < cfg.collision_radius {
                collisions += 1;
            }
        }
    }
    r - cfg.collision_penalty * collisions as f64
}

/// Damped point-mass dynamics; the reward is measured on the next state.
pub fn nav_step(cfg: &NavConfig, state: &PointCloudState, action: &[Vec3]) -> Result<StepOutcome> {
    if action.len() != state.num_agents {
        return Err(Error::InvalidArgument(format!(
            "{} actions for {} agents",
            action.len(),
            state.num_agents
        )));
    }
    let mut next = state.clone();
    for (i, a) in action.iter().enumerate() {
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite action for agent {i}")));
        }
        let mut a = *a;
        if norm(&a) > cfg.max_action {
            log::debug!("clipping action of agent {i} with norm {}", norm(&a));
            a = clip_norm(&a, cfg.max_action);
        }
        let v = group::add(&group::scale(&state.velocities[i], 1.0 - cfg.damping), &group::scale(&a, cfg.dt));
        let v = clip_norm(&v, cfg.max_speed);
        next.velocities[i] = v;
        next.positions[i] = group::add(&state.positions[i], &group::scale(&v, cfg.dt));
    }
    next.t += 1;
    let reward = nav_reward(cfg, &next);
    let done = next.t >= cfg.episode_length;
    Ok(StepOutcome { state: next, reward, done })
}

pub fn nav_observe(cfg: &NavConfig, state: &PointCloudState, agent: usize) -> Result<Observation> {
    if agent >= state.num_agents {
        return Err(Error::InvalidArgument(format!("agent {agent} of {}", state.num_agents)));
    }
    let origin = state.positions[agent];
    let mut velocities = vec![[0.0; 3]; state.num_entities()];
    velocities[agent] = state.velocities[agent];
    Ok(Observation {
        agent,
        num_agents: state.num_agents,
        rel_positions: state.positions.iter().map(|x| group::sub(x, &origin)).collect(),
        velocities,
        absolute_position: cfg.absolute_position_obs.then_some(origin),
    })
}

/// Each agent steers towards its nearest landmark.
pub fn heuristic_actions(cfg: &NavConfig, state: &PointCloudState) -> JointAction {
    (0..state.num_agents)
        .map(|i| {
            let xi = state.positions[i];
            let target = (state.num_agents..state.num_entities())
                .map(|l| state.positions[l])
                .min_by(|a, b| norm(&group::sub(a, &xi)).total_cmp(&norm(&group::sub(b, &xi))));
            match target {
                Some(xl) => {
                    let d = group::sub(&xl, &xi);
                    // Proportional pull with velocity damping, saturating at the action bound.
                    let a = group::sub(&group::scale(&d, 4.0), &group::scale(&state.velocities[i], 1.0));
                    clip_norm(&a, cfg.max_action)
                }
                None => [0.0; 3],
            }
        })
        .collect()
}

/// Uniform samples from the planar disk of radius `max_action`.
pub fn random_actions(cfg: &NavConfig, num_agents: usize, rng: &mut impl Rng) -> JointAction {
    (0..num_agents)
        .map(|_| {
            let r = cfg.max_action * rng.random::<f64>().sqrt();
            let th = rng.random_range(0.0..std::f64::consts::TAU);
            [r * th.cos(), r * th.sin(), 0.0]
        })
        .collect()
}

/// Stateful wrapper owning the current state and its RNG.
#[derive(Clone, Debug)]
pub struct NavEnv {
    pub cfg: NavConfig,
    state: PointCloudState,
    rng: ChaCha8Rng,
}

impl NavEnv {
    pub fn new(cfg: NavConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = sample_initial_state(&cfg, &mut rng)?;
        Ok(Self { cfg, state, rng })
    }

    pub fn reset(&mut self) -> &PointCloudState {
        self.state = sample_initial_state(&self.cfg, &mut self.rng).expect("config validated at construction");
        &self.state
    }

    pub fn state(&self) -> &PointCloudState {
        &self.state
    }

    pub fn step(&mut self, action: &[Vec3]) -> Result<StepOutcome> {
        let out = nav_step(&self.cfg, &self.state, action)?;
        self.state = out.state.clone();
        Ok(out)
    }

    pub fn observe(&self, agent: usize) -> Result<Observation> {
        nav_observe(&self.cfg, &self.state, agent)
    }

    pub fn observe_all(&self) -> Vec<Observation> {
        (0..self.state.num_agents)
            .map(|i| self.observe(i).expect("agent index in range"))
            .collect()
    }
}

/// One line of an episode trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub episode: usize,
    pub t: usize,
    pub state: PointCloudState,
    pub actions: JointAction,
    pub reward: f64,
}

/// Writes [`TraceRecord`]s as line-delimited JSON.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write(&mut self, record: &TraceRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
