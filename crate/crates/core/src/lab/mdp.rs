use crate::envs::TabularGame;
use crate::error::{Error, Result};

/// Finite MDP over joint actions with sparse transition rows.
#[derive(Clone, Debug)]
pub struct TabularMdp {
    pub num_states: usize,
    pub num_actions: usize,
    /// Row `s · num_actions + a`: `(next state, probability)` pairs.
    pub transitions: Vec<Vec<(usize, f64)>>,
    pub reward: Vec<f64>,
}

impl TabularMdp {
    pub fn from_game(game: &TabularGame) -> Self {
        let (ns, na) = (game.num_states(), game.num_actions());
        let mut transitions = Vec::with_capacity(ns * na);
        let mut reward = Vec::with_capacity(ns * na);
        for s in 0..ns {
            for a in 0..na {
                transitions.push(vec![(game.next_state(s, a), 1.0)]);
                reward.push(game.reward(s, a));
            }
        }
        Self {
            num_states: ns,
            num_actions: na,
            transitions,
            reward,
        }
    }

    fn backup(&self, gamma: f64, v: &[f64], s: usize, a: usize) -> f64 {
        let k = s * self.num_actions + a;
        self.reward[k] + gamma * self.transitions[k].iter().map(|&(s2, p)| p * v[s2]).sum::<f64>()
    }

    pub fn q_from_v(&self, gamma: f64, v: &[f64]) -> Vec<f64> {
        (0..self.num_states)
            .flat_map(|s| (0..self.num_actions).map(move |a| (s, a)))
            .map(|(s, a)| self.backup(gamma, v, s, a))
            .collect()
    }
}

/// Values, action values and the final Bellman residual.
#[derive(Clone, Debug)]
pub struct Solution {
    pub v: Vec<f64>,
    pub q: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

const MAX_SWEEPS: usize = 100_000;

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("discount {gamma} outside [0, 1)")));
    }
    Ok(())
}

/// Optimal values by synchronous value iteration until `‖TV − V‖∞ < tol`.
pub fn value_iteration(mdp: &TabularMdp, gamma: f64, tol: f64) -> Result<Solution> {
    check_gamma(gamma)?;
    let mut v = vec![0.0; mdp.num_states];
    for it in 1..=MAX_SWEEPS {
        let next: Vec<f64> = (0..mdp.num_states)
            .map(|s| {
                (0..mdp.num_actions)
                    .map(|a| mdp.backup(gamma, &v, s, a))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if residual < tol {
            let q = mdp.q_from_v(gamma, &v);
            return Ok(Solution {
                v,
                q,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::Divergence(format!("value iteration did not reach residual {tol:e}")))
}

/// Values of a stochastic policy given as `policy[s · A + a]`.
pub fn policy_evaluation(mdp: &TabularMdp, gamma: f64, policy: &[f64], tol: f64) -> Result<Solution> {
    check_gamma(gamma)?;
    if policy.len() != mdp.num_states * mdp.num_actions {
        return Err(Error::InvalidArgument("policy table has the wrong size".into()));
    }
    let na = mdp.num_actions;
    let mut v = vec![0.0; mdp.num_states];
    for it in 1..=MAX_SWEEPS {
        let next: Vec<f64> = (0..mdp.num_states)
            .map(|s| {
                (0..na)
                    .filter(|&a| policy[s * na + a] != 0.0)
                    .map(|a| policy[s * na + a] * mdp.backup(gamma, &v, s, a))
                    .sum()
            })
            .collect();
        let residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if residual < tol {
            let q = mdp.q_from_v(gamma, &v);
            return Ok(Solution {
                v,
                q,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::Divergence(format!("policy evaluation did not reach residual {tol:e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two states, one action each: 0 -> 1 (reward 1), 1 -> 1 (reward 0).
    fn chain() -> TabularMdp {
        TabularMdp {
            num_states: 2,
            num_actions: 1,
            transitions: vec![vec![(1, 1.0)], vec![(1, 1.0)]],
            reward: vec![1.0, 0.0],
        }
    }

    #[test]
    fn chain_values() {
        let s = value_iteration(&chain(), 0.5, 1e-14).unwrap();
        assert!((s.v[0] - 1.0).abs() < 1e-14 && s.v[1].abs() < 1e-14);
        let p = policy_evaluation(&chain(), 0.5, &[1.0, 1.0], 1e-14).unwrap();
        assert_eq!(p.v, s.v);
        assert!(value_iteration(&chain(), 1.0, 1e-3).is_err());
    }
}
