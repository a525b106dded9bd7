//! Predator-prey on a square grid: one suspect predator, two honest
//! predators and a prey.
//!
//! Positions are `(row, col)`; Up decreases the row and Right increases the
//! column. Moves off the grid leave the agent in place. Honest predators and
//! the prey take uniformly random actions.

use rand::Rng;

use crate::error::{domain, Error, Result};

pub const PREY_ACTIONS: usize = 5;
pub const STAY: usize = 0;
pub const UP: usize = 1;
pub const DOWN: usize = 2;
pub const LEFT: usize = 3;
pub const RIGHT: usize = 4;
pub const PREY_ACTION_NAMES: [&str; PREY_ACTIONS] = ["Stay", "Up", "Down", "Left", "Right"];

pub const CHASE_CLOSER: f64 = 10.0;
pub const CHASE_NEUTRAL: f64 = 1.0;
pub const CHASE_FARTHER: f64 = 0.1;

pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreyConfig {
    pub size: usize,
    pub horizon: u64,
    pub suspect_start: Cell,
    pub honest_starts: [Cell; 2],
    pub prey_start: Cell,
}

impl Default for PreyConfig {
    fn default() -> Self {
        Self {
            size: 10,
            horizon: 5000,
            suspect_start: (0, 0),
            honest_starts: [(0, 9), (9, 0)],
            prey_start: (9, 9),
        }
    }
}

impl PreyConfig {
    pub fn validate(&self) -> Result<()> {
        let on = |(r, c): Cell| r < self.size && c < self.size;
        if self.size < 2 || self.horizon == 0 {
            return Err(domain("grid needs size >= 2 and a positive horizon"));
        }
        let cells = [self.suspect_start, self.honest_starts[0], self.honest_starts[1], self.prey_start];
        if !cells.iter().all(|&c| on(c)) {
            return Err(domain("start position off the grid"));
        }
        if cells[..3].contains(&self.prey_start) {
            return Err(domain("prey starts captured"));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> PreyState {
        PreyState {
            suspect: self.suspect_start,
            honest: self.honest_starts,
            prey: self.prey_start,
            step: 0,
        }
    }

    /// Row-major cell index of the (suspect, prey) pair, the state the
    /// suspect's chase policy depends on.
    pub fn pair_index(&self, state: &PreyState) -> usize {
        let cell = |(r, c): Cell| r * self.size + c;
        cell(state.suspect) * self.size * self.size + cell(state.prey)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreyState {
    pub suspect: Cell,
    pub honest: [Cell; 2],
    pub prey: Cell,
    pub step: u64,
}

impl PreyState {
    pub fn captured(&self) -> bool {
        self.suspect == self.prey || self.honest.contains(&self.prey)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreyStep {
    pub next: PreyState,
    pub captured: bool,
    pub terminal: bool,
}

pub fn prey_move(cell: Cell, action: usize, size: usize) -> Cell {
    let (r, c) = cell;
    match action {
        UP if r > 0 => (r - 1, c),
        DOWN if r + 1 < size => (r + 1, c),
        LEFT if c > 0 => (r, c - 1),
        RIGHT if c + 1 < size => (r, c + 1),
        _ => cell,
    }
}

fn dist2((r1, c1): Cell, (r2, c2): Cell) -> usize {
    r1.abs_diff(r2).pow(2) + c1.abs_diff(c2).pow(2)
}

/// Chase heuristic: weight 10 for moves that shrink the Euclidean distance
/// to the prey, 1 for neutral ones (including blocked moves), 0.1 otherwise.
pub fn chase_policy(predator: Cell, prey: Cell, size: usize) -> Result<[f64; PREY_ACTIONS]> {
    if predator.0 >= size || predator.1 >= size || prey.0 >= size || prey.1 >= size {
        return Err(domain("position off the grid"));
    }
    if predator == prey {
        return Err(Error::State("predator already on the prey".into()));
    }
    let now = dist2(predator, prey);
    let mut w = [0.0; PREY_ACTIONS];
    for (a, slot) in w.iter_mut().enumerate() {
        let after = dist2(prey_move(predator, a, size), prey);
        *slot = match after.cmp(&now) {
            std::cmp::Ordering::Less => CHASE_CLOSER,
            std::cmp::Ordering::Equal => CHASE_NEUTRAL,
            std::cmp::Ordering::Greater => CHASE_FARTHER,
        };
    }
    let total: f64 = w.iter().sum();
    Ok(w.map(|x| x / total))
}

/// Advances every agent once; capture is checked after all moves.
pub fn prey_step<R: Rng + ?Sized>(
    state: &PreyState,
    suspect_action: usize,
    config: &PreyConfig,
    rng: &mut R,
) -> Result<PreyStep> {
    if suspect_action >= PREY_ACTIONS {
        return Err(domain(format!("action {suspect_action} out of range")));
    }
    check_live(state, config)?;
    let honest = [rng.random_range(0..PREY_ACTIONS), rng.random_range(0..PREY_ACTIONS)];
    let prey = rng.random_range(0..PREY_ACTIONS);
    prey_step_joint(state, [suspect_action, honest[0], honest[1], prey], config)
}

/// Deterministic step with every agent's action given, ordered suspect,
/// honest, honest, prey.
pub fn prey_step_joint(state: &PreyState, actions: [usize; 4], config: &PreyConfig) -> Result<PreyStep> {
    if actions.iter().any(|&a| a >= PREY_ACTIONS) {
        return Err(domain(format!("actions {actions:?} out of range")));
    }
    check_live(state, config)?;
    let size = config.size;
    let mut next = *state;
    next.suspect = prey_move(state.suspect, actions[0], size);
    next.honest[0] = prey_move(state.honest[0], actions[1], size);
    next.honest[1] = prey_move(state.honest[1], actions[2], size);
    next.prey = prey_move(state.prey, actions[3], size);
    next.step += 1;
    let captured = next.captured();
    Ok(PreyStep {
        next,
        captured,
        terminal: captured || next.step >= config.horizon,
    })
}

fn check_live(state: &PreyState, config: &PreyConfig) -> Result<()> {
    if state.captured() || state.step >= config.horizon {
        return Err(Error::State("predator-prey episode already over".into()));
    }
    Ok(())
}
