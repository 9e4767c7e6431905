use serde::Serialize;

use crate::envs::{nav_observe, transform_action, JointAction, NavConfig, Observation, PointCloudState};
use crate::error::{Error, Result};
use crate::group::{norm, GroupElement, Vec3};

/// Side length of the navigation map used for the translation list.
pub const NAV_MAP_SIZE: f64 = 1.5;

/// Outputs of one actor evaluation per observation, in input order.
pub type ActorFn<'a> = dyn Fn(&[Observation]) -> Result<Vec<Vec3>> + 'a;
/// Q values of `(state, joint action)` pairs, in input order.
pub type CriticFn<'a> = dyn Fn(&[PointCloudState], &[JointAction]) -> Result<Vec<f64>> + 'a;

const ZERO_ACTION: f64 = 1e-12;

/// `30°, 60°, ..., 330°`.
pub fn rotation_angles_deg() -> Vec<f64> {
    (1..12).map(|k| 30.0 * k as f64).collect()
}

/// Eight in-plane shifts: `(±l, 0)`, `(±l/2, 0)`, `(0, ±l)`, `(0, ±l/2)`.
pub fn translation_list(l: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(8);
    for s in [l, -l, 0.5 * l, -0.5 * l] {
        out.push([s, 0.0, 0.0]);
    }
    for s in [l, -l, 0.5 * l, -0.5 * l] {
        out.push([0.0, s, 0.0]);
    }
    out
}

fn rotations() -> Vec<GroupElement> {
    rotation_angles_deg().into_iter().map(|d| GroupElement::rotation_z(d.to_radians())).collect()
}

fn translations() -> Vec<GroupElement> {
    translation_list(NAV_MAP_SIZE).into_iter().map(GroupElement::translation_only).collect()
}

/// A measure value with the number of comparisons behind it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Measure {
    pub value: f64,
    pub pairs: usize,
    /// Pairs dropped because one of the two actions was zero.
    pub skipped: usize,
}

fn observe_all(cfg: &NavConfig, s: &PointCloudState) -> Result<Vec<Observation>> {
    (0..s.num_agents).map(|i| nav_observe(cfg, s, i)).collect()
}

/// Mean cosine between `g · actor(o(s))` and `actor(o(g · s))` over agents,
/// elements and states.
fn actor_measure(cfg: &NavConfig, actor: &ActorFn, states: &[PointCloudState], group: &[GroupElement]) -> Result<Measure> {
    if states.is_empty() {
        return Err(Error::InvalidArgument("invariancy needs at least one state".into()));
    }
    let mut obs = Vec::new();
    for s in states {
        obs.extend(observe_all(cfg, s)?);
        for g in group {
            obs.extend(observe_all(cfg, &s.transform(g))?);
        }
    }
    let out = actor(&obs)?;
    if out.len() != obs.len() {
        return Err(Error::Shape {
            op: "actor invariancy",
            lhs: vec![obs.len()],
            rhs: vec![out.len()],
        });
    }
    let (mut sum, mut pairs, mut skipped) = (0.0, 0, 0);
    let mut k = 0;
    for s in states {
        let n = s.num_agents;
        let base = &out[k..k + n];
        k += n;
        for g in group {
            for i in 0..n {
                let a = g.apply_vector(&base[i]);
                let b = out[k + i];
                let (na, nb) = (norm(&a), norm(&b));
                if na < ZERO_ACTION || nb < ZERO_ACTION {
                    skipped += 1;
                    continue;
                }
                let c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (na * nb);
                sum += c.clamp(-1.0, 1.0);
                pairs += 1;
            }
            k += n;
        }
    }
    if skipped > 0 {
        log::warn!("actor invariancy skipped {skipped} pairs with a zero action");
    }
    if pairs == 0 {
        return Err(Error::UndefinedMeasure(format!("all {skipped} action pairs were zero")));
    }
    Ok(Measure {
        value: sum / pairs as f64,
        pairs,
        skipped,
    })
}

/// Negated mean `|Q(s, a) − Q(g · s, g · a)|`.
fn critic_measure(
    critic: &CriticFn,
    samples: &[(PointCloudState, JointAction)],
    group: &[GroupElement],
) -> Result<Measure> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("invariancy needs at least one sample".into()));
    }
    let per = group.len() + 1;
    let mut states = Vec::with_capacity(samples.len() * per);
    let mut actions = Vec::with_capacity(samples.len() * per);
    for (s, a) in samples {
        states.push(s.clone());
        actions.push(a.clone());
        for g in group {
            states.push(s.transform(g));
            actions.push(transform_action(a, g));
        }
    }
    let q = critic(&states, &actions)?;
    if q.len() != states.len() {
        return Err(Error::Shape {
            op: "critic invariancy",
            lhs: vec![states.len()],
            rhs: vec![q.len()],
        });
    }
    let mut sum = 0.0;
    for chunk in q.chunks(per) {
        sum += chunk[1..].iter().map(|v| (v - chunk[0]).abs()).sum::<f64>();
    }
    let pairs = samples.len() * group.len();
    Ok(Measure {
        value: -sum / pairs as f64,
        pairs,
        skipped: 0,
    })
}

pub fn actor_rotation_invariancy(cfg: &NavConfig, actor: &ActorFn, states: &[PointCloudState]) -> Result<Measure> {
    actor_measure(cfg, actor, states, &rotations())
}

pub fn actor_translation_invariancy(cfg: &NavConfig, actor: &ActorFn, states: &[PointCloudState]) -> Result<Measure> {
    actor_measure(cfg, actor, states, &translations())
}

pub fn critic_rotation_invariancy(critic: &CriticFn, samples: &[(PointCloudState, JointAction)]) -> Result<Measure> {
    critic_measure(critic, samples, &rotations())
}

pub fn critic_translation_invariancy(critic: &CriticFn, samples: &[(PointCloudState, JointAction)]) -> Result<Measure> {
    critic_measure(critic, samples, &translations())
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariancyReport {
    pub actor_rotation: Measure,
    pub actor_translation: Measure,
    pub critic_rotation: Measure,
    pub critic_translation: Measure,
    pub num_samples: usize,
    pub angles_deg: Vec<f64>,
    pub translations: Vec<Vec3>,
}

/// All four measures on one sample; actions for the critic are the sampled ones.
pub fn invariancy_report(
    cfg: &NavConfig,
    actor: &ActorFn,
    critic: &CriticFn,
    samples: &[(PointCloudState, JointAction)],
) -> Result<InvariancyReport> {
    let states: Vec<PointCloudState> = samples.iter().map(|(s, _)| s.clone()).collect();
    Ok(InvariancyReport {
        actor_rotation: actor_rotation_invariancy(cfg, actor, &states)?,
        actor_translation: actor_translation_invariancy(cfg, actor, &states)?,
        critic_rotation: critic_rotation_invariancy(critic, samples)?,
        critic_translation: critic_translation_invariancy(critic, samples)?,
        num_samples: samples.len(),
        angles_deg: rotation_angles_deg(),
        translations: translation_list(NAV_MAP_SIZE),
    })
}

/// Time series of reports keyed by training episode.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EmergenceTracker {
    pub points: Vec<(usize, InvariancyReport)>,
}

impl EmergenceTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, episode: usize, report: InvariancyReport) {
        self.points.push((episode, report));
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest deviation of any recorded measure from its ideal value
    /// (1 for actor cosines, 0 for critic differences).
    pub fn max_deviation_from_ideal(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|(_, r)| {
                [
                    1.0 - r.actor_rotation.value,
                    1.0 - r.actor_translation.value,
                    -r.critic_rotation.value,
                    -r.critic_translation.value,
                ]
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::envs::sample_initial_state;

    fn states(cfg: &NavConfig, n: usize) -> Vec<PointCloudState> {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        (0..n).map(|_| sample_initial_state(cfg, &mut rng).unwrap()).collect()
    }

    #[test]
    fn angle_and_shift_lists() {
        assert_eq!(rotation_angles_deg().len(), 11);
        let mean_cos: f64 = rotation_angles_deg().iter().map(|d| d.to_radians().cos()).sum::<f64>() / 11.0;
        assert!((mean_cos + 1.0 / 11.0).abs() < 1e-12);
        assert_eq!(translation_list(2.0).len(), 8);
    }

    #[test]
    fn fixed_vector_actor() {
        let cfg = NavConfig::new(2);
        let actor = |o: &[Observation]| -> Result<Vec<Vec3>> { Ok(vec![[0.3, -0.2, 0.0]; o.len()]) };
        let m = actor_rotation_invariancy(&cfg, &actor, &states(&cfg, 4)).unwrap();
        assert!((m.value + 1.0 / 11.0).abs() < 1e-12);
        assert_eq!(m.pairs, 4 * 11 * 2);
        let t = actor_translation_invariancy(&cfg, &actor, &states(&cfg, 4)).unwrap();
        assert!((t.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_landmark_pointer_is_equivariant() {
        let cfg = NavConfig::new(3);
        let actor = |o: &[Observation]| -> Result<Vec<Vec3>> {
            Ok(o.iter().map(|ob| ob.rel_positions[ob.num_agents]).collect())
        };
        let scaled = |o: &[Observation]| -> Result<Vec<Vec3>> {
            Ok(actor(o)?.into_iter().map(|v| [7.0 * v[0], 7.0 * v[1], 7.0 * v[2]]).collect())
        };
        let s = states(&cfg, 5);
        let a = actor_rotation_invariancy(&cfg, &actor, &s).unwrap();
        let b = actor_rotation_invariancy(&cfg, &scaled, &s).unwrap();
        assert!((a.value - 1.0).abs() < 1e-12);
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn zero_actions_are_skipped() {
        let cfg = NavConfig::new(2);
        let zero = |o: &[Observation]| -> Result<Vec<Vec3>> { Ok(vec![[0.0; 3]; o.len()]) };
        assert!(matches!(
            actor_rotation_invariancy(&cfg, &zero, &states(&cfg, 2)),
            Err(Error::UndefinedMeasure(_))
        ));
        let half = |o: &[Observation]| -> Result<Vec<Vec3>> {
            Ok(o.iter().map(|ob| if ob.agent == 0 { [0.0; 3] } else { [1.0, 0.0, 0.0] }).collect())
        };
        let m = actor_rotation_invariancy(&cfg, &half, &states(&cfg, 2)).unwrap();
        assert_eq!(m.skipped, 22);
        assert_eq!(m.pairs, 22);
    }

    #[test]
    fn absolute_position_breaks_translation_measure() {
        let mut cfg = NavConfig::new(2);
        cfg.absolute_position_obs = true;
        let actor = |o: &[Observation]| -> Result<Vec<Vec3>> {
            Ok(o.iter().map(|ob| ob.absolute_position.unwrap()).collect())
        };
        let m = actor_translation_invariancy(&cfg, &actor, &states(&cfg, 3)).unwrap();
        assert!(m.value < 1.0);
    }

    #[test]
    fn critic_measures() {
        let cfg = NavConfig::new(2);
        let samples: Vec<_> = states(&cfg, 3).into_iter().map(|s| (s, vec![[0.5, 0.1, 0.0]; 2])).collect();
        let constant = |s: &[PointCloudState], _: &[JointAction]| -> Result<Vec<f64>> { Ok(vec![2.5; s.len()]) };
        assert_eq!(critic_rotation_invariancy(&constant, &samples).unwrap().value, 0.0);
        let x_coord = |s: &[PointCloudState], _: &[JointAction]| -> Result<Vec<f64>> {
            Ok(s.iter().map(|st| st.positions[0][0]).collect())
        };
        assert!(critic_rotation_invariancy(&x_coord, &samples).unwrap().value < 0.0);
        assert!(critic_translation_invariancy(&x_coord, &samples).unwrap().value < 0.0);
    }
}
