use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::mdp::{policy_evaluation, value_iteration, Solution, TabularMdp};
use crate::envs::{TabularGame, C4};
use crate::error::{Error, Result};

pub const TABULAR_GAMMA: f64 = 0.9;
const VI_TOL: f64 = 1e-12;
const CHECK_TOL: f64 = 1e-10;
/// Actions within this gap of the optimum count as optimal when building the
/// invariant greedy policy.
const OPTIMAL_GAP: f64 = 1e-9;

/// One assertion group: how many comparisons were made and the worst error.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub count: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            count: 0,
            max_error: 0.0,
            tolerance,
        }
    }

    pub fn record(&mut self, err: f64) {
        self.count += 1;
        if err.is_nan() || err > self.max_error {
            self.max_error = if err.is_nan() { f64::INFINITY } else { err };
        }
    }

    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {} comparisons, max error {:.3e} (tol {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.count,
            self.max_error,
            self.tolerance
        )
    }
}

fn write_checks(f: &mut fmt::Formatter<'_>, checks: &[Check]) -> fmt::Result {
    for c in checks {
        writeln!(f, "  {c}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem1Report {
    pub residual: f64,
    pub iterations: usize,
    pub audited_tuples: usize,
    pub checks: Vec<Check>,
}

impl Theorem1Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for Theorem1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "optimal values: {} sweeps, residual {:.2e}; audit covered {} (s, a, g) tuples",
            self.iterations, self.residual, self.audited_tuples
        )?;
        write_checks(f, &self.checks)
    }
}

fn audit(game: &TabularGame) -> Result<usize> {
    game.audit()
        .map_err(|v| Error::SymmetryViolation(format!("game fails its symmetry audit: {v}")))
}

/// Orbit representative (smallest state index) and the smallest group element
/// mapping `s` onto it.
fn canonical(game: &TabularGame, s: usize) -> (usize, C4) {
    let c = C4::all().iter().map(|&g| game.act_state(g, s)).min().expect("nonempty group");
    let g = *C4::all().iter().find(|&&g| game.act_state(g, s) == c).expect("c is in the orbit");
    (c, g)
}

/// A G-invariant optimal policy: at each orbit representative, the smallest
/// optimal joint action symmetrised over the representative's stabiliser;
/// other states copy it through the canonicalising group element.
pub fn invariant_optimal_policy(game: &TabularGame, q: &[f64]) -> Vec<f64> {
    let (ns, na) = (game.num_states(), game.num_actions());
    let mut pi = vec![0.0; ns * na];
    for s in 0..ns {
        let (c, g) = canonical(game, s);
        let best = (0..na).map(|a| q[c * na + a]).fold(f64::NEG_INFINITY, f64::max);
        let a_star = (0..na).find(|&a| q[c * na + a] >= best - OPTIMAL_GAP).expect("some action attains the max");
        let stab: Vec<C4> = C4::all().into_iter().filter(|&h| game.act_state(h, c) == c).collect();
        let w = 1.0 / stab.len() as f64;
        // pi(a | s) = pi_c(K_g a | c), so mass on a_c lands on K_{g^-1} a_c.
        for h in stab {
            let a_c = game.act_action(h, a_star);
            pi[s * na + game.act_action(g.inverse(), a_c)] += w;
        }
    }
    pi
}

fn uniform_policy(game: &TabularGame) -> Vec<f64> {
    vec![1.0 / game.num_actions() as f64; game.num_states() * game.num_actions()]
}

/// Invariant but far from optimal: a softmax over the reward of each joint
/// action's successor state.
fn shaped_invariant_policy(game: &TabularGame) -> Vec<f64> {
    let (ns, na) = (game.num_states(), game.num_actions());
    let mut pi = vec![0.0; ns * na];
    for s in 0..ns {
        let w: Vec<f64> = (0..na).map(|a| (0.7 * game.reward(game.next_state(s, a), 0)).exp()).collect();
        let z: f64 = w.iter().sum();
        for a in 0..na {
            pi[s * na + a] = w[a] / z;
        }
    }
    pi
}

fn value_invariance(game: &TabularGame, check: &mut Check, v: &[f64]) {
    for g in C4::all() {
        for s in 0..game.num_states() {
            check.record((v[s] - v[game.act_state(g, s)]).abs());
        }
    }
}

/// Exhaustive check of G-invariant optimal values, existence of a G-invariant
/// optimal policy, and value invariance of G-invariant policies.
pub fn verify_theorem1_tabular(game: &TabularGame) -> Result<Theorem1Report> {
    let audited = audit(game)?;
    let mdp = TabularMdp::from_game(game);
    let opt = value_iteration(&mdp, TABULAR_GAMMA, VI_TOL)?;
    let (ns, na) = (game.num_states(), game.num_actions());

    let mut q_inv = Check::new("(i) Q*(s,a) = Q*(L_g s, K_g a)", CHECK_TOL);
    for g in C4::all() {
        for s in 0..ns {
            for a in 0..na {
                let (gs, ga) = (game.act_state(g, s), game.act_action(g, a));
                q_inv.record((opt.q[s * na + a] - opt.q[gs * na + ga]).abs());
            }
        }
    }
    let mut v_inv = Check::new("(i) V*(s) = V*(L_g s)", CHECK_TOL);
    value_invariance(game, &mut v_inv, &opt.v);

    let pi = invariant_optimal_policy(game, &opt.q);
    let mut pi_inv = Check::new("(ii) pi*(K_g a | L_g s) = pi*(a | s)", CHECK_TOL);
    for g in C4::all() {
        for s in 0..ns {
            for a in 0..na {
                let (gs, ga) = (game.act_state(g, s), game.act_action(g, a));
                pi_inv.record((pi[s * na + a] - pi[gs * na + ga]).abs());
            }
        }
    }
    let v_pi = policy_evaluation(&mdp, TABULAR_GAMMA, &pi, VI_TOL)?;
    let mut pi_opt = Check::new("(ii) V_pi*(s) = V*(s)", CHECK_TOL);
    for s in 0..ns {
        pi_opt.record((v_pi.v[s] - opt.v[s]).abs());
    }

    let mut checks = vec![q_inv, v_inv, pi_inv, pi_opt];
    for (name, policy) in [
        ("(iii) uniform policy: V(s) = V(L_g s)", uniform_policy(game)),
        ("(iii) shaped invariant policy: V(s) = V(L_g s)", shaped_invariant_policy(game)),
    ] {
        let sol = policy_evaluation(&mdp, TABULAR_GAMMA, &policy, VI_TOL)?;
        let mut c = Check::new(name, CHECK_TOL);
        value_invariance(game, &mut c, &sol.v);
        checks.push(c);
    }
    Ok(Theorem1Report {
        residual: opt.residual,
        iterations: opt.iterations,
        audited_tuples: audited,
        checks,
    })
}

/// The abstract game induced by the C4 orbits.
#[derive(Clone, Debug)]
pub struct Quotient {
    /// Representative state of each abstract state (ascending).
    pub representatives: Vec<usize>,
    /// `l(s)`.
    pub state_map: Vec<usize>,
    /// Element taking `s` to its representative; `k_s(a) = K_{g_s} a` and the
    /// observation map `h_s = L_{g_s}`.
    pub canonicaliser: Vec<C4>,
    pub mdp: TabularMdp,
}

impl Quotient {
    pub fn build(game: &TabularGame) -> Result<Self> {
        let (ns, na) = (game.num_states(), game.num_actions());
        let mut representatives = Vec::new();
        let mut state_map = vec![usize::MAX; ns];
        let mut canonicaliser = Vec::with_capacity(ns);
        for s in 0..ns {
            let (c, g) = canonical(game, s);
            if game.act_state(g, s) != c {
                return Err(Error::Quotient(format!("state {s}: element {} misses representative {c}", g.0)));
            }
            if c == s {
                representatives.push(s);
            }
            canonicaliser.push(g);
        }
        for s in 0..ns {
            let c = game.act_state(canonicaliser[s], s);
            state_map[s] = representatives
                .binary_search(&c)
                .map_err(|_| Error::Quotient(format!("orbit of state {s} has no representative {c}")))?;
        }
        let base = TabularMdp::from_game(game);
        let nb = representatives.len();
        let mut transitions = Vec::with_capacity(nb * na);
        let mut reward = Vec::with_capacity(nb * na);
        for &c in &representatives {
            for a in 0..na {
                let mut row: Vec<(usize, f64)> = Vec::new();
                for &(s2, p) in &base.transitions[c * na + a] {
                    let t = state_map[s2];
                    match row.iter_mut().find(|(u, _)| *u == t) {
                        Some(e) => e.1 += p,
                        None => row.push((t, p)),
                    }
                }
                transitions.push(row);
                reward.push(base.reward[c * na + a]);
            }
        }
        Ok(Self {
            representatives,
            state_map,
            canonicaliser,
            mdp: TabularMdp {
                num_states: nb,
                num_actions: na,
                transitions,
                reward,
            },
        })
    }

    pub fn num_orbits(&self) -> usize {
        self.representatives.len()
    }

    pub fn action_map(&self, game: &TabularGame, s: usize, a: usize) -> usize {
        game.act_action(self.canonicaliser[s], a)
    }

    /// `pi_up(a | s) = pi_bar(k_s(a) | l(s))`.
    pub fn lift(&self, game: &TabularGame, abstract_policy: &[f64]) -> Vec<f64> {
        let na = game.num_actions();
        let mut pi = vec![0.0; game.num_states() * na];
        for s in 0..game.num_states() {
            for a in 0..na {
                pi[s * na + a] = abstract_policy[self.state_map[s] * na + self.action_map(game, s, a)];
            }
        }
        pi
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HomomorphismReport {
    pub num_states: usize,
    pub num_orbits: usize,
    pub fixed_points: usize,
    pub checks: Vec<Check>,
}

impl HomomorphismReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for HomomorphismReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "quotient: {} states in {} orbits ({} fixed by every rotation)",
            self.num_states, self.num_orbits, self.fixed_points
        )?;
        write_checks(f, &self.checks)
    }
}

/// Builds the orbit quotient, checks the homomorphism equations exactly, and
/// compares optimal and lifted-policy values between the two games.
pub fn verify_homomorphism_lifting(game: &TabularGame, seed: u64) -> Result<HomomorphismReport> {
    audit(game)?;
    let quo = Quotient::build(game)?;
    let base = TabularMdp::from_game(game);
    let (ns, na, nb) = (game.num_states(), game.num_actions(), quo.num_orbits());

    let mut reward = Check::new("reward: r(s,a) = r_bar(l(s), k_s(a))", 0.0);
    let mut block = Check::new("transition: P([s']|s,a) = P_bar(l(s')|l(s), k_s(a))", 0.0);
    let mut obs = Check::new("observation: o(l(s)) = h_s(o(s))", 0.0);
    let mut surj = Check::new("maps are surjective", 0.0);
    for s in 0..ns {
        let (ls, g) = (quo.state_map[s], quo.canonicaliser[s]);
        obs.record(if game.act_state(g, s) == quo.representatives[ls] { 0.0 } else { 1.0 });
        for a in 0..na {
            let ka = quo.action_map(game, s, a);
            reward.record((base.reward[s * na + a] - quo.mdp.reward[ls * na + ka]).abs());
            let mut lifted = vec![0.0; nb];
            for &(s2, p) in &base.transitions[s * na + a] {
                lifted[quo.state_map[s2]] += p;
            }
            let mut abs_row = vec![0.0; nb];
            for &(t, p) in &quo.mdp.transitions[ls * na + ka] {
                abs_row[t] += p;
            }
            for t in 0..nb {
                block.record((lifted[t] - abs_row[t]).abs());
            }
        }
        let mut hit = vec![false; na];
        for a in 0..na {
            hit[quo.action_map(game, s, a)] = true;
        }
        surj.record(if hit.iter().all(|&h| h) { 0.0 } else { 1.0 });
    }
    let mut seen = vec![false; nb];
    for &t in &quo.state_map {
        seen[t] = true;
    }
    surj.record(if seen.iter().all(|&h| h) { 0.0 } else { 1.0 });

    let opt = value_iteration(&base, TABULAR_GAMMA, VI_TOL)?;
    let opt_bar = value_iteration(&quo.mdp, TABULAR_GAMMA, VI_TOL)?;
    let mut v_opt = Check::new("V*(s) = V_bar*(l(s))", CHECK_TOL);
    let mut q_opt = Check::new("Q*(s,a) = Q_bar*(l(s), k_s(a))", CHECK_TOL);
    compare_values(game, &quo, &opt, &opt_bar, &mut v_opt, &mut q_opt);

    let mut checks = vec![reward, block, obs, surj, v_opt, q_opt];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_bar: Vec<f64> = (0..nb)
        .flat_map(|_| {
            let w: Vec<f64> = (0..na).map(|_| rng.random::<f64>()).collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(move |x| x / z)
        })
        .collect();
    let uniform_bar = vec![1.0 / na as f64; nb * na];
    for (label, pi_bar) in [("random", random_bar), ("uniform", uniform_bar)] {
        let pi_up = quo.lift(game, &pi_bar);
        let mut lift_ok = Check::new(&format!("{label} lift: sum over k_s^-1(a_bar) matches pi_bar"), CHECK_TOL);
        for s in 0..ns {
            let mut mass = vec![0.0; na];
            for a in 0..na {
                mass[quo.action_map(game, s, a)] += pi_up[s * na + a];
            }
            for (ab, m) in mass.iter().enumerate() {
                lift_ok.record((m - pi_bar[quo.state_map[s] * na + ab]).abs());
            }
        }
        let sol = policy_evaluation(&base, TABULAR_GAMMA, &pi_up, VI_TOL)?;
        let sol_bar = policy_evaluation(&quo.mdp, TABULAR_GAMMA, &pi_bar, VI_TOL)?;
        let mut v = Check::new(&format!("{label} lift: V_up(s) = V_bar(l(s))"), CHECK_TOL);
        let mut q = Check::new(&format!("{label} lift: Q_up(s,a) = Q_bar(l(s), k_s(a))"), CHECK_TOL);
        compare_values(game, &quo, &sol, &sol_bar, &mut v, &mut q);
        checks.extend([lift_ok, v, q]);
    }
    let fixed_points = (0..ns).filter(|&s| C4::all().iter().all(|&g| game.act_state(g, s) == s)).count();
    Ok(HomomorphismReport {
        num_states: ns,
        num_orbits: nb,
        fixed_points,
        checks,
    })
}

fn compare_values(game: &TabularGame, quo: &Quotient, full: &Solution, bar: &Solution, v: &mut Check, q: &mut Check) {
    let na = game.num_actions();
    for s in 0..game.num_states() {
        let ls = quo.state_map[s];
        v.record((full.v[s] - bar.v[ls]).abs());
        for a in 0..na {
            q.record((full.q[s * na + a] - bar.q[ls * na + quo.action_map(game, s, a)]).abs());
        }
    }
}
