//! The `verify` suite: tabular theorem checks plus an equivariance battery
//! over the navigation game and freshly initialised networks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use symmarl::envs::{nav_observe, nav_step, random_actions, sample_initial_state, transform_action, NavConfig, Observation, TabularGame};
use symmarl::graph::{build_observation_graph, build_state_action_graph};
use symmarl::group::{self, GroupElement};
use symmarl::lab::{verify_homomorphism_lifting, verify_theorem1_tabular, Check};
use symmarl::marl::{Maddpg, TrainingConfig};

pub const EQUIVARIANCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct Group {
    pub name: String,
    /// Set when the group could not run at all.
    pub error: Option<String>,
    pub checks: Vec<Check>,
}

impl Group {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(Check::passed)
    }

    /// Description of the first failure, if any.
    pub fn first_failure(&self) -> Option<String> {
        if let Some(e) = &self.error {
            return Some(format!("{}: {e}", self.name));
        }
        self.checks.iter().find(|c| !c.passed()).map(|c| format!("{}: {c}", self.name))
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// Adds this amount to one reward entry of the gridworld before checking.
    pub perturb_reward: Option<f64>,
    pub seed: u64,
}

fn sample_g(r: &mut ChaCha8Rng, k: usize) -> GroupElement {
    match k % 3 {
        0 => GroupElement::random(r, 5.0),
        1 => GroupElement::reflection_xy().compose(&GroupElement::random(r, 5.0)),
        _ => GroupElement::translation_only([r.random_range(-5.0..5.0), r.random_range(-5.0..5.0), 0.0]),
    }
}

fn equivariance_battery(seed: u64) -> symmarl::Result<Vec<Check>> {
    let cfg = TrainingConfig::default();
    let env = NavConfig::new(3);
    let learner = Maddpg::new(TrainingConfig { seed, ..cfg.clone() })?;
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut step = Check::new("nav_step equivariance", EQUIVARIANCE_TOL);
    let mut graphs = Check::new("graph builder equivariance", EQUIVARIANCE_TOL);
    let mut actor = Check::new("actor equivariance", EQUIVARIANCE_TOL);
    let mut critic = Check::new("critic invariance", EQUIVARIANCE_TOL);
    let observe = |s: &symmarl::envs::PointCloudState| -> symmarl::Result<Vec<Observation>> { (0..3).map(|i| nav_observe(&env, s, i)).collect() };
    for k in 0..100 {
        let s = sample_initial_state(&env, &mut r)?;
        let a = random_actions(&env, 3, &mut r);
        let g = sample_g(&mut r, k);
        let (sg, ag) = (s.transform(&g), transform_action(&a, &g));

        let (o1, o2) = (nav_step(&env, &s, &a)?, nav_step(&env, &sg, &ag)?);
        step.record(o2.state.max_abs_diff(&o1.state.transform(&g)).max((o1.reward - o2.reward).abs()));

        let gsa = build_state_action_graph(&s, Some(&a), &cfg.graph)?.transform(&g)?;
        let sga = build_state_action_graph(&sg, Some(&ag), &cfg.graph)?;
        let mut e: f64 = 0.0;
        for (x, y) in gsa.node_features.iter().zip(&sga.node_features) {
            e = e.max(x.max_abs_diff(y));
        }
        for (x, y) in gsa.positions.iter().zip(&sga.positions) {
            e = e.max(group::norm(&group::sub(x, y)));
        }
        let (og, _) = build_observation_graph(&nav_observe(&env, &s, 0)?, &cfg.graph)?;
        let (gog, _) = build_observation_graph(&nav_observe(&env, &sg, 0)?, &cfg.graph)?;
        for (x, y) in og.transform(&g.linear_part())?.edge_attributes.iter().zip(&gog.edge_attributes) {
            e = e.max(x.max_abs_diff(y));
        }
        graphs.record(e);

        let (obs, obs_g) = (observe(&s)?, observe(&sg)?);
        let pa = learner.act(&obs.iter().collect::<Vec<_>>())?;
        let pb = learner.act(&obs_g.iter().collect::<Vec<_>>())?;
        actor.record(pa.iter().zip(&pb).map(|(x, y)| group::norm(&group::sub(&g.apply_vector(x), y))).fold(0.0, f64::max));

        let q = learner.q_values(&[&s, &sg], &[a.clone(), ag])?;
        critic.record((q[0] - q[1]).abs());
    }
    Ok(vec![step, graphs, actor, critic])
}

fn group_from<T>(name: &str, r: symmarl::Result<T>, checks: impl FnOnce(T) -> Vec<Check>) -> Group {
    match r {
        Ok(v) => Group {
            name: name.into(),
            error: None,
            checks: checks(v),
        },
        Err(e) => Group {
            name: name.into(),
            error: Some(e.to_string()),
            checks: Vec::new(),
        },
    }
}

/// Runs every assertion group; nothing stops at the first failure.
pub fn run_suite(opts: &VerifyOptions) -> Vec<Group> {
    let mut game = TabularGame::corners3();
    if let Some(d) = opts.perturb_reward {
        game.perturb_reward(1, 1, d);
    }
    vec![
        group_from("value and policy invariance (tabular)", verify_theorem1_tabular(&game), |r| r.checks),
        group_from("quotient and lifting", verify_homomorphism_lifting(&game, opts.seed), |r| r.checks),
        group_from("equivariance battery", equivariance_battery(opts.seed), |c| c),
    ]
}
