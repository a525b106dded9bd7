//! Grid soccer: an attacker carries the ball past a slippery defender.
//!
//! Positions are `(row, col)` on a 4-row by 5-column grid. North decreases
//! the row, East increases the column. The attacker (A) scores in column 4,
//! the defender (B) in column 0.

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::stochastic::model::{Policy, StochasticGameModel};

pub const SOCCER_ROWS: usize = 4;
pub const SOCCER_COLS: usize = 5;
pub const SOCCER_CELLS: usize = SOCCER_ROWS * SOCCER_COLS;
/// Both positions times possession, including unreachable shared cells.
pub const SOCCER_STATES: usize = SOCCER_CELLS * SOCCER_CELLS * 2;
pub const SOCCER_ACTIONS: usize = 5;
pub const SOCCER_DISCOUNT: f64 = 0.95;

pub const NORTH: usize = 0;
pub const SOUTH: usize = 1;
pub const EAST: usize = 2;
pub const WEST: usize = 3;
pub const WAIT: usize = 4;
pub const SOCCER_ACTION_NAMES: [&str; SOCCER_ACTIONS] = ["N", "S", "E", "W", "X"];

pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Possession {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SoccerState {
    pub attacker: Cell,
    pub defender: Cell,
    pub possession: Possession,
}

impl Default for SoccerState {
    fn default() -> Self {
        Self {
            attacker: (1, 0),
            defender: (1, 4),
            possession: Possession::A,
        }
    }
}

impl SoccerState {
    pub fn is_terminal(&self) -> bool {
        match self.possession {
            Possession::A => self.attacker.1 == SOCCER_COLS - 1,
            Possession::B => self.defender.1 == 0,
        }
    }

    /// Index in `[0, 800)` used by the tabular model.
    pub fn index(&self) -> usize {
        let cell = |(r, c): Cell| r * SOCCER_COLS + c;
        let poss = usize::from(self.possession == Possession::B);
        (cell(self.attacker) * SOCCER_CELLS + cell(self.defender)) * 2 + poss
    }

    pub fn from_index(index: usize) -> Result<Self> {
        if index >= SOCCER_STATES {
            return Err(domain(format!("soccer state index {index} out of range")));
        }
        let cell = |i: usize| (i / SOCCER_COLS, i % SOCCER_COLS);
        let pair = index / 2;
        Ok(Self {
            attacker: cell(pair / SOCCER_CELLS),
            defender: cell(pair % SOCCER_CELLS),
            possession: if index % 2 == 0 { Possession::A } else { Possession::B },
        })
    }

    fn check(&self) -> Result<()> {
        let ok = |(r, c): Cell| r < SOCCER_ROWS && c < SOCCER_COLS;
        if ok(self.attacker) && ok(self.defender) {
            Ok(())
        } else {
            Err(domain(format!("soccer state {self:?} off the grid")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoccerRules {
    pub slip_prob: f64,
    pub score_reward: f64,
    pub concede_reward: f64,
    pub step_cost: f64,
}

impl Default for SoccerRules {
    fn default() -> Self {
        Self {
            slip_prob: 0.25,
            score_reward: 100.0,
            concede_reward: -100.0,
            step_cost: -0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoccerStep {
    pub next: SoccerState,
    /// Reward to the attacker; the defender receives its negation.
    pub reward: f64,
    pub terminal: bool,
    pub slipped: bool,
    pub bounced: bool,
}

fn target(cell: Cell, action: usize) -> Cell {
    let (r, c) = cell;
    match action {
        NORTH if r > 0 => (r - 1, c),
        SOUTH if r + 1 < SOCCER_ROWS => (r + 1, c),
        EAST if c + 1 < SOCCER_COLS => (r, c + 1),
        WEST if c > 0 => (r, c - 1),
        _ => cell,
    }
}

fn check_action(action: usize) -> Result<()> {
    if action < SOCCER_ACTIONS {
        Ok(())
    } else {
        Err(domain(format!("soccer action {action} out of range")))
    }
}

/// Movement and possession after the slip is known.
///
/// Returns the next state and whether the players bounced; on a bounce the
/// ball changes hands exactly when `flip` is set.
fn resolve(state: &SoccerState, action_a: usize, action_b: usize, flip: bool) -> (SoccerState, bool) {
    let (a, b) = (state.attacker, state.defender);
    let (ta, tb) = (target(a, action_a), target(b, action_b));
    let (moving_a, moving_b) = (ta != a, tb != b);
    let mut next = *state;
    let swap = moving_a && moving_b && ta == b && tb == a;
    let same = ta == tb && (moving_a || moving_b);
    if swap || (same && moving_a && moving_b) {
        if flip {
            next.possession = match state.possession {
                Possession::A => Possession::B,
                Possession::B => Possession::A,
            };
        }
        return (next, true);
    }
    if same {
        // One player walked into a stationary opponent, who takes the ball.
        next.possession = if moving_a { Possession::B } else { Possession::A };
        return (next, false);
    }
    next.attacker = ta;
    next.defender = tb;
    (next, false)
}

fn reward_for(next: &SoccerState, rules: &SoccerRules) -> (f64, bool) {
    let terminal = next.is_terminal();
    let mut reward = rules.step_cost;
    if terminal {
        reward += match next.possession {
            Possession::A => rules.score_reward,
            Possession::B => rules.concede_reward,
        };
    }
    (reward, terminal)
}

/// One simultaneous move. The defender's slip is drawn first, then
/// collisions are resolved against the effective actions.
pub fn soccer_step<R: Rng + ?Sized>(
    state: &SoccerState,
    action_a: usize,
    action_b: usize,
    rules: &SoccerRules,
    rng: &mut R,
) -> Result<SoccerStep> {
    state.check()?;
    check_action(action_a)?;
    check_action(action_b)?;
    if state.is_terminal() {
        return Err(Error::State("soccer episode already over".into()));
    }
    let slipped = action_b != WAIT && rng.random::<f64>() < rules.slip_prob;
    let effective_b = if slipped { WAIT } else { action_b };
    let (_, would_bounce) = resolve(state, action_a, effective_b, false);
    let flip = would_bounce && rng.random::<f64>() < 0.5;
    let (next, bounced) = resolve(state, action_a, effective_b, flip);
    let (reward, terminal) = reward_for(&next, rules);
    Ok(SoccerStep {
        next,
        reward,
        terminal,
        slipped,
        bounced,
    })
}

/// Exact outcome distribution of [`soccer_step`] as `(next, prob, reward)`.
pub fn soccer_outcomes(
    state: &SoccerState,
    action_a: usize,
    action_b: usize,
    rules: &SoccerRules,
) -> Vec<(SoccerState, f64, f64)> {
    let slips: &[(bool, f64)] = if action_b == WAIT {
        &[(false, 1.0)]
    } else {
        &[(false, 1.0 - rules.slip_prob), (true, rules.slip_prob)]
    };
    let mut out = Vec::new();
    for &(slipped, ps) in slips {
        if ps == 0.0 {
            continue;
        }
        let b = if slipped { WAIT } else { action_b };
        let (stay, bounced) = resolve(state, action_a, b, false);
        let branches: Vec<(SoccerState, f64)> = if bounced {
            vec![(stay, 0.5), (resolve(state, action_a, b, true).0, 0.5)]
        } else {
            vec![(stay, 1.0)]
        };
        for (next, pb) in branches {
            let (reward, _) = reward_for(&next, rules);
            out.push((next, ps * pb, reward));
        }
    }
    out
}

/// Tabular model over all 800 states and 25 joint actions; terminal states
/// absorb with zero reward. Rewards are native (attacker's view, zero-sum).
pub fn soccer_build_model(rules: &SoccerRules) -> Result<StochasticGameModel> {
    let joint = SOCCER_ACTIONS * SOCCER_ACTIONS;
    let rows = SOCCER_STATES * joint;
    let mut reward_a = vec![0.0; rows];
    let mut transitions = Vec::with_capacity(rows);
    for s in 0..SOCCER_STATES {
        let state = SoccerState::from_index(s)?;
        for j in 0..joint {
            if state.is_terminal() {
                transitions.push(vec![(s, 1.0)]);
                continue;
            }
            let (a, b) = (j / SOCCER_ACTIONS, j % SOCCER_ACTIONS);
            let mut row = Vec::new();
            let mut expected = 0.0;
            for (next, p, r) in soccer_outcomes(&state, a, b, rules) {
                row.push((next.index(), p));
                expected += p * r;
            }
            reward_a[s * joint + j] = expected;
            transitions.push(row);
        }
    }
    let reward_b = reward_a.iter().map(|r| -r).collect();
    StochasticGameModel::new(
        SOCCER_STATES,
        vec![SOCCER_ACTIONS, SOCCER_ACTIONS],
        vec![reward_a, reward_b],
        transitions,
        SOCCER_DISCOUNT,
    )
}

/// Moves 90% of the East mass to West and Wait in equal parts.
pub fn afraid_transform(row: &[f64]) -> Result<Vec<f64>> {
    if row.len() != SOCCER_ACTIONS {
        return Err(domain(format!("soccer row has {} entries", row.len())));
    }
    let mut out = row.to_vec();
    let delta = 0.9 * row[EAST];
    if delta > 0.0 {
        out[EAST] -= delta;
        out[WEST] += 0.5 * delta;
        out[WAIT] += 0.5 * delta;
    }
    Ok(out)
}

pub fn afraid_policy(policy: &Policy) -> Result<Policy> {
    let rows = policy.rows().map(afraid_transform).collect::<Result<Vec<_>>>()?;
    Policy::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn st(a: Cell, b: Cell, poss: Possession) -> SoccerState {
        SoccerState {
            attacker: a,
            defender: b,
            possession: poss,
        }
    }

    #[test]
    fn index_roundtrip() {
        for i in 0..SOCCER_STATES {
            assert_eq!(SoccerState::from_index(i).unwrap().index(), i);
        }
        assert!(SoccerState::from_index(SOCCER_STATES).is_err());
    }

    #[test]
    fn attacker_moves_east() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = SoccerState::default();
        let out = soccer_step(&s, EAST, WAIT, &SoccerRules::default(), &mut rng).unwrap();
        assert_eq!(out.next.attacker, (1, 1));
        assert_eq!(out.next.defender, (1, 4));
        assert_eq!(out.reward, -0.05);
        assert!(!out.terminal);
    }

    #[test]
    fn attacker_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = st((0, 3), (2, 3), Possession::A);
        let out = soccer_step(&s, EAST, WAIT, &SoccerRules::default(), &mut rng).unwrap();
        assert_eq!(out.next.attacker, (0, 4));
        assert!(out.terminal);
        assert!((out.reward - 99.95).abs() < 1e-12);
        assert!(soccer_step(&out.next, WAIT, WAIT, &SoccerRules::default(), &mut rng).is_err());
    }

    #[test]
    fn both_wait_is_still() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = st((2, 1), (0, 3), Possession::B);
        let out = soccer_step(&s, WAIT, WAIT, &SoccerRules::default(), &mut rng).unwrap();
        assert_eq!(out.next, s);
        assert_eq!(out.reward, -0.05);
    }

    #[test]
    fn walls_clip() {
        let s = st((0, 0), (3, 4), Possession::A);
        let (next, _) = resolve(&s, NORTH, SOUTH, false);
        assert_eq!(next, s);
    }

    #[test]
    fn swap_bounces_with_coin() {
        let s = st((1, 1), (1, 2), Possession::A);
        let (kept, bounced) = resolve(&s, EAST, WEST, false);
        assert!(bounced);
        assert_eq!(kept, s);
        let (flipped, _) = resolve(&s, EAST, WEST, true);
        assert_eq!(flipped.possession, Possession::B);
        assert_eq!(flipped.attacker, (1, 1));
    }

    #[test]
    fn same_target_bounces() {
        let s = st((1, 1), (1, 3), Possession::A);
        let (_, bounced) = resolve(&s, EAST, WEST, false);
        assert!(bounced);
    }

    #[test]
    fn walking_into_waiter_hands_over_ball() {
        let s = st((1, 1), (1, 2), Possession::A);
        let (next, bounced) = resolve(&s, EAST, WAIT, false);
        assert!(!bounced);
        assert_eq!(next.possession, Possession::B);
        assert_eq!((next.attacker, next.defender), ((1, 1), (1, 2)));
        let s = st((1, 1), (1, 2), Possession::B);
        let (next, _) = resolve(&s, WAIT, WEST, false);
        assert_eq!(next.possession, Possession::A);
    }

    #[test]
    fn model_shape_and_slip_split() {
        let model = soccer_build_model(&SoccerRules::default()).unwrap();
        assert_eq!(model.num_states(), 800);
        assert_eq!(model.num_joint_actions(), 25);
        assert!(model.is_zero_sum());
        let s = st((3, 0), (1, 3), Possession::A);
        let row = model.transition(s.index(), model.joint_index(&[WAIT, NORTH]));
        let moved = st((3, 0), (0, 3), Possession::A).index();
        let probs: Vec<(usize, f64)> = row.to_vec();
        assert_eq!(probs.len(), 2);
        for (next, p) in probs {
            if next == moved {
                assert!((p - 0.75).abs() < 1e-15);
            } else {
                assert_eq!(next, s.index());
                assert!((p - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn terminal_states_absorb() {
        let model = soccer_build_model(&SoccerRules::default()).unwrap();
        let t = st((2, 4), (0, 0), Possession::A);
        assert!(t.is_terminal());
        for j in 0..25 {
            assert_eq!(model.transition(t.index(), j), &[(t.index(), 1.0)]);
            assert_eq!(model.reward(0, t.index(), j), 0.0);
        }
    }

    #[test]
    fn afraid_examples() {
        let row = [0.01, 0.01, 0.96, 0.01, 0.01];
        let out = afraid_transform(&row).unwrap();
        let expected = [0.01, 0.01, 0.096, 0.442, 0.442];
        for (o, e) in out.iter().zip(expected) {
            assert!((o - e).abs() < 1e-12, "{out:?}");
        }
        let no_east = [0.2, 0.3, 0.0, 0.25, 0.25];
        assert_eq!(afraid_transform(&no_east).unwrap(), no_east.to_vec());
        assert!(afraid_transform(&[1.0]).is_err());
    }
}
