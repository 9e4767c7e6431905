//! Fixtures shared by the kernel benchmarks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symmarl::envs::{nav_observe, nav_step, random_actions, sample_initial_state, JointAction, NavConfig, Observation, PointCloudState};
use symmarl::group::{IrrepSpec, SteerableVector};
use symmarl::marl::Transition;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sv(r: &mut impl Rng, spec: &IrrepSpec) -> SteerableVector {
    SteerableVector::new(spec.clone(), (0..spec.dim()).map(|_| r.random_range(-1.0..1.0)).collect()).expect("matching dim")
}

pub fn states(env: &NavConfig, count: usize, seed: u64) -> Vec<(PointCloudState, JointAction)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| (sample_initial_state(env, &mut r).expect("valid env"), random_actions(env, env.num_agents, &mut r)))
        .collect()
}

/// One-step transitions from random states, enough for a replay batch.
pub fn transitions(env: &NavConfig, count: usize, seed: u64) -> Vec<Transition> {
    let observe = |s: &PointCloudState| -> Vec<Observation> { (0..env.num_agents).map(|i| nav_observe(env, s, i).expect("agent index")).collect() };
    states(env, count, seed)
        .into_iter()
        .map(|(s, a)| {
            let out = nav_step(env, &s, &a).expect("valid step");
            Transition {
                observations: observe(&s),
                next_observations: observe(&out.state),
                state: s,
                action: a,
                reward: out.reward,
                next_state: out.state,
                done: out.done,
            }
        })
        .collect()
}
