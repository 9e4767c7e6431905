use std::fmt;

use crate::error::{Error, Result};

/// The cyclic group of quarter turns about the grid centre; element `k` turns
/// by `k · 90°` counter-clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct C4(pub u8);

impl C4 {
    pub const ORDER: usize = 4;

    pub fn all() -> [C4; 4] {
        [C4(0), C4(1), C4(2), C4(3)]
    }

    pub fn compose(self, other: C4) -> C4 {
        C4((self.0 + other.0) % 4)
    }

    pub fn inverse(self) -> C4 {
        C4((4 - self.0) % 4)
    }

    /// Quarter turns of a centred integer coordinate.
    pub fn rotate(self, (x, y): (i32, i32)) -> (i32, i32) {
        (0..self.0).fold((x, y), |(x, y), _| (-y, x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridMove {
    Stay,
    Up,
    Down,
    Left,
    Right,
}

impl GridMove {
    pub const ALL: [GridMove; 5] = [GridMove::Stay, GridMove::Up, GridMove::Down, GridMove::Left, GridMove::Right];

    pub fn delta(self) -> (i32, i32) {
        match self {
            GridMove::Stay => (0, 0),
            GridMove::Up => (0, 1),
            GridMove::Down => (0, -1),
            GridMove::Left => (-1, 0),
            GridMove::Right => (1, 0),
        }
    }

    pub fn from_delta(d: (i32, i32)) -> GridMove {
        *GridMove::ALL.iter().find(|m| m.delta() == d).expect("unit or zero delta")
    }

    pub fn index(self) -> usize {
        GridMove::ALL.iter().position(|&m| m == self).expect("listed")
    }
}

/// A `(s, a, g)` triple where the game fails its equivariance equations.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditViolation {
    pub state: usize,
    pub action: usize,
    pub element: C4,
    pub what: &'static str,
}

impl fmt::Display for AuditViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} equation fails at state {}, joint action {}, rotation {}",
            self.what, self.state, self.action, self.element.0
        )
    }
}

/// Two agents on an `n × n` grid (`n` odd) with deterministic moves and a
/// reward that penalises the distance of each agent to its closest goal cell.
///
/// States index `(cell_1, cell_2)` as `cell_1 · n² + cell_2`; joint actions
/// index `(move_1, move_2)` as `move_1 · 5 + move_2`.
#[derive(Clone, Debug)]
pub struct TabularGame {
    n: usize,
    goals: Vec<(i32, i32)>,
    next: Vec<usize>,
    reward: Vec<f64>,
    state_perm: [Vec<usize>; 4],
    action_perm: [Vec<usize>; 4],
}

impl TabularGame {
    pub const NUM_MOVES: usize = 5;

    /// `goals` are centred coordinates `(x, y)` with `|x|, |y| <= (n - 1) / 2`.
    pub fn build(n: usize, goals: &[(i32, i32)]) -> Result<Self> {
        if n == 0 || n % 2 == 0 {
            return Err(Error::InvalidArgument(format!("grid size must be odd, got {n}")));
        }
        let h = (n as i32 - 1) / 2;
        if goals.is_empty() {
            return Err(Error::InvalidArgument("at least one goal cell is required".into()));
        }
        if let Some(g) = goals.iter().find(|g| g.0.abs() > h || g.1.abs() > h) {
            return Err(Error::InvalidArgument(format!("goal {g:?} outside the grid")));
        }
        for g in goals {
            let r = C4(1).rotate(*g);
            if !goals.contains(&r) {
                return Err(Error::SymmetryViolation(format!(
                    "goal set not closed under quarter turns: {g:?} maps to {r:?}"
                )));
            }
        }
        let mut game = Self {
            n,
            goals: goals.to_vec(),
            next: Vec::new(),
            reward: Vec::new(),
            state_perm: Default::default(),
            action_perm: Default::default(),
        };
        let (ns, na) = (game.num_states(), game.num_actions());
        game.next = vec![0; ns * na];
        game.reward = vec![0.0; ns * na];
        for s in 0..ns {
            let (c1, c2) = game.cells(s);
            let r = -((game.goal_distance(c1) + game.goal_distance(c2)) as f64) / n as f64;
            for a in 0..na {
                let (m1, m2) = (GridMove::ALL[a / 5], GridMove::ALL[a % 5]);
                let s2 = game.state_index(game.moved(c1, m1), game.moved(c2, m2));
                game.next[s * na + a] = s2;
                game.reward[s * na + a] = r;
            }
        }
        for g in C4::all() {
            let k = g.0 as usize;
            game.state_perm[k] = (0..ns)
                .map(|s| {
                    let (c1, c2) = game.cells(s);
                    game.state_index(g.rotate(c1), g.rotate(c2))
                })
                .collect();
            game.action_perm[k] = (0..na)
                .map(|a| {
                    let rot = |m: GridMove| GridMove::from_delta(g.rotate(m.delta())).index();
                    rot(GridMove::ALL[a / 5]) * 5 + rot(GridMove::ALL[a % 5])
                })
                .collect();
        }
        Ok(game)
    }

    /// The shipped instance: 3 × 3 grid with goals in the four corners.
    pub fn corners3() -> Self {
        Self::build(3, &[(-1, -1), (1, -1), (1, 1), (-1, 1)]).expect("corner set is C4-closed")
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn goals(&self) -> &[(i32, i32)] {
        &self.goals
    }

    pub fn num_states(&self) -> usize {
        self.n.pow(4)
    }

    pub fn num_actions(&self) -> usize {
        Self::NUM_MOVES * Self::NUM_MOVES
    }

    pub fn cells(&self, s: usize) -> ((i32, i32), (i32, i32)) {
        let nn = self.n * self.n;
        (self.cell_coord(s / nn), self.cell_coord(s % nn))
    }

    fn cell_coord(&self, c: usize) -> (i32, i32) {
        let h = (self.n as i32 - 1) / 2;
        ((c % self.n) as i32 - h, (c / self.n) as i32 - h)
    }

    fn cell_index(&self, (x, y): (i32, i32)) -> usize {
        let h = (self.n as i32 - 1) / 2;
        (y + h) as usize * self.n + (x + h) as usize
    }

    pub fn state_index(&self, c1: (i32, i32), c2: (i32, i32)) -> usize {
        self.cell_index(c1) * self.n * self.n + self.cell_index(c2)
    }

    fn moved(&self, (x, y): (i32, i32), m: GridMove) -> (i32, i32) {
        let h = (self.n as i32 - 1) / 2;
        let (dx, dy) = m.delta();
        ((x + dx).clamp(-h, h), (y + dy).clamp(-h, h))
    }

    fn goal_distance(&self, (x, y): (i32, i32)) -> i32 {
        self.goals.iter().map(|g| (g.0 - x).abs() + (g.1 - y).abs()).min().expect("nonempty goals")
    }

    pub fn next_state(&self, s: usize, a: usize) -> usize {
        self.next[s * self.num_actions() + a]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions() + a]
    }

    /// `L_g` on state indices.
    pub fn act_state(&self, g: C4, s: usize) -> usize {
        self.state_perm[g.0 as usize][s]
    }

    /// `K_g` on joint-action indices (state independent here).
    pub fn act_action(&self, g: C4, a: usize) -> usize {
        self.action_perm[g.0 as usize][a]
    }

    /// Overwrites one reward entry; used to check that audits catch asymmetry.
    pub fn perturb_reward(&mut self, s: usize, a: usize, delta: f64) {
        let na = self.num_actions();
        self.reward[s * na + a] += delta;
    }

    /// Exhaustive check of `P(L_g s, K_g a) = L_g P(s, a)` and
    /// `r(L_g s, K_g a) = r(s, a)`, plus the group axioms of the actions.
    pub fn audit(&self) -> std::result::Result<usize, AuditViolation> {
        let mut checked = 0;
        for g in C4::all() {
            for s in 0..self.num_states() {
                for a in 0..self.num_actions() {
                    let (gs, ga) = (self.act_state(g, s), self.act_action(g, a));
                    let viol = |what| AuditViolation {
                        state: s,
                        action: a,
                        element: g,
                        what,
                    };
                    if self.next_state(gs, ga) != self.act_state(g, self.next_state(s, a)) {
                        return Err(viol("transition"));
                    }
                    if self.reward(gs, ga) != self.reward(s, a) {
                        return Err(viol("reward"));
                    }
                    for h in C4::all() {
                        let gh = g.compose(h);
                        if self.act_state(g, self.act_state(h, s)) != self.act_state(gh, s)
                            || self.act_action(g, self.act_action(h, a)) != self.act_action(gh, a)
                        {
                            return Err(viol("group action"));
                        }
                    }
                    checked += 1;
                }
            }
        }
        Ok(checked)
    }
}
