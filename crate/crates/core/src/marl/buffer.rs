use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::envs::{transform_action, JointAction, Observation, PointCloudState};
use crate::error::{Error, Result};
use crate::group::{clip_norm, GroupElement, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: PointCloudState,
    pub observations: Vec<Observation>,
    pub action: JointAction,
    pub reward: f64,
    pub next_state: PointCloudState,
    pub next_observations: Vec<Observation>,
    pub done: bool,
}

impl Transition {
    pub fn num_agents(&self) -> usize {
        self.action.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.state.num_agents;
        if self.action.len() != n
            || self.observations.len() != n
            || self.next_observations.len() != n
            || self.next_state.num_agents != n
            || self.next_state.num_entities() != self.state.num_entities()
        {
            return Err(Error::InvalidArgument(format!(
                "transition components disagree on the agent count {n}"
            )));
        }
        Ok(())
    }

    /// The same transition seen through `g`; rewards are unchanged.
    pub fn transform(&self, g: &GroupElement) -> Self {
        Self {
            state: self.state.transform(g),
            observations: self.observations.iter().map(|o| o.transform(g)).collect(),
            action: transform_action(&self.action, g),
            reward: self.reward,
            next_state: self.next_state.transform(g),
            next_observations: self.next_observations.iter().map(|o| o.transform(g)).collect(),
            done: self.done,
        }
    }
}

/// Fixed-capacity ring buffer; the oldest transition is overwritten first.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("replay capacity must be positive".into()));
        }
        Ok(Self {
            items: Vec::new(),
            capacity,
            next: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// Indices drawn uniformly without replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.items.len() < batch_size {
            return Err(Error::NotReady {
                have: self.items.len(),
                need: batch_size,
            });
        }
        Ok(index::sample(rng, self.items.len(), batch_size).into_vec())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch_size: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        Ok(self.sample_indices(batch_size, rng)?.into_iter().map(|i| &self.items[i]).collect())
    }
}

/// Adds isotropic in-plane Gaussian noise of standard deviation `scale` per
/// axis, then clips to `max_norm`.
pub fn exploration_noise<R: Rng + ?Sized>(action: &Vec3, scale: f64, max_norm: f64, rng: &mut R) -> Vec3 {
    if !(scale > 0.0) {
        return clip_norm(action, max_norm);
    }
    let n = Normal::new(0.0, scale).expect("positive finite scale");
    let noisy = [action[0] + n.sample(rng), action[1] + n.sample(rng), action[2]];
    clip_norm(&noisy, max_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::envs::{nav_observe, nav_reset, nav_step, NavConfig};

    fn transition(seed: u64) -> Transition {
        let cfg = NavConfig::new(2);
        let s = nav_reset(2, seed).unwrap();
        let a = vec![[0.2, 0.1, 0.0], [-0.3, 0.0, 0.0]];
        let out = nav_step(&cfg, &s, &a).unwrap();
        Transition {
            observations: (0..2).map(|i| nav_observe(&cfg, &s, i).unwrap()).collect(),
            next_observations: (0..2).map(|i| nav_observe(&cfg, &out.state, i).unwrap()).collect(),
            state: s,
            action: a,
            reward: out.reward,
            next_state: out.state,
            done: out.done,
        }
    }

    #[test]
    fn ring_buffer_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3).unwrap();
        for k in 0..5 {
            let mut t = transition(0);
            t.reward = k as f64;
            b.push(t);
        }
        assert_eq!(b.len(), 3);
        let r: Vec<f64> = (0..3).map(|i| b.get(i).unwrap().reward).collect();
        assert_eq!(r, vec![3.0, 4.0, 2.0]);
    }

    #[test]
    fn not_ready_below_batch_size() {
        let mut b = ReplayBuffer::new(10).unwrap();
        b.push(transition(1));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(b.sample(2, &mut rng), Err(Error::NotReady { have: 1, need: 2 })));
    }

    #[test]
    fn full_batch_is_permutation() {
        let mut b = ReplayBuffer::new(8).unwrap();
        for k in 0..8 {
            b.push(transition(k));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut idx = b.sample_indices(8, &mut rng).unwrap();
        idx.sort();
        assert_eq!(idx, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn transition_transform_roundtrip() {
        let t = transition(3);
        t.validate().unwrap();
        let g = GroupElement::rotation_z(0.7).with_translation([0.3, -1.0, 0.0]);
        let back = t.transform(&g).transform(&g.inverse());
        assert!(back.state.max_abs_diff(&t.state) < 1e-12);
        assert_eq!(back.reward, t.reward);
    }

    #[test]
    fn zero_noise_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = [0.3, -0.4, 0.0];
        assert_eq!(exploration_noise(&a, 0.0, 1.0, &mut rng), a);
    }
}
