//! Tabular stochastic games and per-state policies, with a versioned text
//! format for both.

use std::fmt::Write as _;

use crate::error::{domain, shape, Error, Result};
use crate::game::check_distribution;

/// Row sums of the transition kernel must be within this of 1.
pub const TRANSITION_TOL: f64 = 1e-9;

const MODEL_HEADER: &str = "eqsentinel-model v1";
const POLICY_HEADER: &str = "eqsentinel-policy v1";

/// Finite stochastic game `(S, A, {r_i}, P, γ)` with sparse transition rows.
///
/// Joint actions are indexed row-major over `action_counts`, as in
/// [`NormalFormGame`](crate::game::NormalFormGame). Rewards are stored in the
/// environment's native units; [`StochasticGameModel::unit_rewards`] gives the
/// affine rescaling into `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticGameModel {
    num_states: usize,
    action_counts: Vec<usize>,
    num_joint: usize,
    rewards: Vec<Vec<f64>>,
    transitions: Vec<Vec<(usize, f64)>>,
    discount: f64,
}

impl StochasticGameModel {
    /// `rewards[i][s * J + j]` and `transitions[s * J + j]` as `(next, prob)` lists.
    pub fn new(
        num_states: usize,
        action_counts: Vec<usize>,
        rewards: Vec<Vec<f64>>,
        transitions: Vec<Vec<(usize, f64)>>,
        discount: f64,
    ) -> Result<Self> {
        if num_states == 0 || action_counts.is_empty() || action_counts.contains(&0) {
            return Err(shape("model needs states, players and actions"));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(domain(format!("discount {discount} outside (0, 1)")));
        }
        let num_joint: usize = action_counts.iter().product();
        let rows = num_states * num_joint;
        if rewards.len() != action_counts.len() || rewards.iter().any(|r| r.len() != rows) {
            return Err(shape(format!("rewards must be {} x {rows}", action_counts.len())));
        }
        if rewards.iter().flatten().any(|r| !r.is_finite()) {
            return Err(domain("non-finite reward"));
        }
        if transitions.len() != rows {
            return Err(shape(format!("{} transition rows, expected {rows}", transitions.len())));
        }
        let mut merged = Vec::with_capacity(rows);
        for (r, row) in transitions.into_iter().enumerate() {
            merged.push(normalize_row(row, num_states).map_err(|e| match e {
                Error::Domain(msg) => domain(format!("transition row {r}: {msg}")),
                other => other,
            })?);
        }
        Ok(Self {
            num_states,
            action_counts,
            num_joint,
            rewards,
            transitions: merged,
            discount,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_joint_actions(&self) -> usize {
        self.num_joint
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn with_discount(mut self, discount: f64) -> Result<Self> {
        if !(discount > 0.0 && discount < 1.0) {
            return Err(domain(format!("discount {discount} outside (0, 1)")));
        }
        self.discount = discount;
        Ok(self)
    }

    pub fn joint_index(&self, actions: &[usize]) -> usize {
        actions
            .iter()
            .zip(&self.action_counts)
            .fold(0, |acc, (&a, &n)| acc * n + a)
    }

    pub fn reward(&self, player: usize, state: usize, joint: usize) -> f64 {
        self.rewards[player][state * self.num_joint + joint]
    }

    pub fn transition(&self, state: usize, joint: usize) -> &[(usize, f64)] {
        &self.transitions[state * self.num_joint + joint]
    }

    /// Whether `r_1 = -r_0` everywhere (two players only).
    pub fn is_zero_sum(&self) -> bool {
        self.rewards.len() == 2 && self.rewards[0].iter().zip(&self.rewards[1]).all(|(a, b)| a + b == 0.0)
    }

    /// Copy with every reward mapped by one affine map into `[0, 1]`.
    pub fn unit_rewards(&self) -> Self {
        let (lo, hi) = self
            .rewards
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = self.clone();
        for r in out.rewards.iter_mut().flatten() {
            *r = (*r - lo) / span;
        }
        out
    }

    /// Versioned text form: header, sizes, then one line per (state, joint
    /// action) with the rewards and the sparse transition row.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{MODEL_HEADER}").unwrap();
        writeln!(s, "states {}", self.num_states).unwrap();
        write!(s, "actions").unwrap();
        for n in &self.action_counts {
            write!(s, " {n}").unwrap();
        }
        writeln!(s).unwrap();
        writeln!(s, "discount {:?}", self.discount).unwrap();
        for state in 0..self.num_states {
            for joint in 0..self.num_joint {
                write!(s, "row {state} {joint}").unwrap();
                for p in 0..self.num_players() {
                    write!(s, " {:?}", self.reward(p, state, joint)).unwrap();
                }
                let row = self.transition(state, joint);
                write!(s, " {}", row.len()).unwrap();
                for (next, prob) in row {
                    write!(s, " {next} {prob:?}").unwrap();
                }
                writeln!(s).unwrap();
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = || lines.next().ok_or_else(|| Error::Parse("model text truncated".into()));
        if next()?.trim() != MODEL_HEADER {
            return Err(Error::Parse("not a model text".into()));
        }
        let num_states: usize = single(next()?, "states")?;
        let actions_line = next()?;
        let action_counts: Vec<usize> = fields(actions_line, "actions")?
            .iter()
            .map(|v| num(v))
            .collect::<Result<_>>()?;
        let discount: f64 = single(next()?, "discount")?;
        let n = action_counts.len();
        let num_joint: usize = action_counts.iter().product();
        let rows = num_states * num_joint;
        let mut rewards = vec![vec![0.0; rows]; n];
        let mut transitions = vec![Vec::new(); rows];
        for _ in 0..rows {
            let f = fields(next()?, "row")?;
            if f.len() < 3 + n {
                return Err(Error::Parse("short model row".into()));
            }
            let state: usize = num(f[0])?;
            let joint: usize = num(f[1])?;
            if state >= num_states || joint >= num_joint {
                return Err(Error::Parse(format!("row index ({state}, {joint}) out of range")));
            }
            let r = state * num_joint + joint;
            for p in 0..n {
                rewards[p][r] = num(f[2 + p])?;
            }
            let k: usize = num(f[2 + n])?;
            let rest = &f[3 + n..];
            if rest.len() != 2 * k {
                return Err(Error::Parse(format!("row ({state}, {joint}) lists {} fields for {k} entries", rest.len())));
            }
            transitions[r] = rest
                .chunks(2)
                .map(|c| Ok((num(c[0])?, num(c[1])?)))
                .collect::<Result<_>>()?;
        }
        Self::new(num_states, action_counts, rewards, transitions, discount)
    }
}

fn normalize_row(mut row: Vec<(usize, f64)>, num_states: usize) -> Result<Vec<(usize, f64)>> {
    if row.iter().any(|&(s, p)| s >= num_states || !(p >= 0.0) || !p.is_finite()) {
        return Err(domain("bad next state or probability"));
    }
    row.sort_by_key(|&(s, _)| s);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (s, p) in row {
        match merged.last_mut() {
            Some(last) if last.0 == s => last.1 += p,
            _ => merged.push((s, p)),
        }
    }
    merged.retain(|&(_, p)| p > 0.0);
    let total: f64 = merged.iter().map(|&(_, p)| p).sum();
    if (total - 1.0).abs() > TRANSITION_TOL {
        return Err(domain(format!("row sums to {total}")));
    }
    Ok(merged)
}

/// Per-state distribution over one player's actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    num_actions: usize,
    table: Vec<f64>,
}

impl Policy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let num_actions = rows.first().map_or(0, Vec::len);
        if num_actions == 0 {
            return Err(shape("policy needs at least one state and one action"));
        }
        let mut table = Vec::with_capacity(rows.len() * num_actions);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != num_actions {
                return Err(shape(format!("state {s} has {} actions, expected {num_actions}", row.len())));
            }
            check_distribution(row).map_err(|m| domain(format!("state {s}: {m}")))?;
            table.extend_from_slice(row);
        }
        Ok(Self { num_actions, table })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Result<Self> {
        Self::new(vec![vec![1.0 / num_actions as f64; num_actions]; num_states])
    }

    pub fn num_states(&self) -> usize {
        self.table.len() / self.num_actions
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.table[state * self.num_actions..(state + 1) * self.num_actions]
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.table[state * self.num_actions + action]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.table.chunks(self.num_actions)
    }

    /// Applies `f` to every row; the result must again be a valid policy.
    pub fn map_rows(&self, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Result<Self> {
        Self::new(self.rows().enumerate().map(|(s, r)| f(s, r)).collect())
    }

    pub(crate) fn check_index(&self, state: usize, action: usize) -> Result<()> {
        if state >= self.num_states() || action >= self.num_actions {
            return Err(shape(format!(
                "(state {state}, action {action}) outside {} x {} policy",
                self.num_states(),
                self.num_actions
            )));
        }
        Ok(())
    }

    pub(crate) fn check_same_shape(&self, other: &Policy) -> Result<()> {
        if self.num_actions != other.num_actions || self.table.len() != other.table.len() {
            return Err(shape("policies differ in shape"));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{POLICY_HEADER}").unwrap();
        writeln!(s, "states {}", self.num_states()).unwrap();
        writeln!(s, "actions {}", self.num_actions).unwrap();
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|p| format!("{p:?}")).collect();
            writeln!(s, "{}", cells.join(" ")).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = || lines.next().ok_or_else(|| Error::Parse("policy text truncated".into()));
        if next()?.trim() != POLICY_HEADER {
            return Err(Error::Parse("not a policy text".into()));
        }
        let states: usize = single(next()?, "states")?;
        let actions: usize = single(next()?, "actions")?;
        let mut rows = Vec::with_capacity(states);
        for _ in 0..states {
            let row: Vec<f64> = next()?.split_whitespace().map(num).collect::<Result<_>>()?;
            if row.len() != actions {
                return Err(Error::Parse(format!("policy row has {} entries, expected {actions}", row.len())));
            }
            rows.push(row);
        }
        Self::new(rows)
    }
}

/// `(1 - β) π + β / |A|` row-wise.
pub fn smooth_policy(policy: &Policy, beta: f64) -> Result<Policy> {
    if !(0.0..1.0).contains(&beta) {
        return Err(domain(format!("smoothing {beta} outside [0, 1)")));
    }
    let floor = beta / policy.num_actions() as f64;
    policy.map_rows(|_, row| row.iter().map(|p| (1.0 - beta) * p + floor).collect())
}

/// `(1 - ε) base + ε target` row-wise.
pub fn mixture_policy(base: &Policy, target: &Policy, epsilon: f64) -> Result<Policy> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(domain(format!("mixture weight {epsilon} outside [0, 1]")));
    }
    base.check_same_shape(target)?;
    base.map_rows(|s, row| {
        row.iter()
            .zip(target.row(s))
            .map(|(b, t)| (1.0 - epsilon) * b + epsilon * t)
            .collect()
    })
}

fn fields<'a>(line: &'a str, key: &str) -> Result<Vec<&'a str>> {
    let mut it = line.split_whitespace();
    if it.next() != Some(key) {
        return Err(Error::Parse(format!("expected `{key}` line, found `{line}`")));
    }
    Ok(it.collect())
}

fn single<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
    match fields(line, key)?.as_slice() {
        [v] => num(v),
        _ => Err(Error::Parse(format!("expected one value on `{key}` line"))),
    }
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse(format!("bad number `{v}`")))
}
