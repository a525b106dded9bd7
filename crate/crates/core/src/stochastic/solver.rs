//! Zero-sum matrix games by linear programming, and Shapley value iteration
//! for two-player zero-sum stochastic games.

use rayon::prelude::*;

use crate::error::{domain, shape, Result};
use crate::stochastic::model::{Policy, StochasticGameModel};

const PIVOT_TOL: f64 = 1e-12;

/// Maximin solution of a zero-sum matrix game, row player maximizing.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGameSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
}

/// Solves `max_p min_q pᵀ A q`.
///
/// After shifting `A` so every entry is at least 1, the column player's
/// problem `max Σy s.t. A y ≤ 1, y ≥ 0` starts feasible at the slack basis.
/// The primal optimum gives the column strategy and the final reduced costs
/// of the slacks give the row strategy. Bland's rule rules out cycling.
pub fn matrix_game_solve(payoff: &[Vec<f64>]) -> Result<MatrixGameSolution> {
    let rows = payoff.len();
    let cols = payoff.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(shape("empty payoff matrix"));
    }
    if payoff.iter().any(|r| r.len() != cols) {
        return Err(shape("ragged payoff matrix"));
    }
    if payoff.iter().flatten().any(|v| !v.is_finite()) {
        return Err(domain("non-finite payoff"));
    }
    let min = payoff.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = min - 1.0;

    // Tableau columns: y_0..y_{cols-1}, s_0..s_{rows-1}, rhs.
    let width = cols + rows + 1;
    let mut t = vec![vec![0.0; width]; rows + 1];
    for (i, row) in payoff.iter().enumerate() {
        for (j, a) in row.iter().enumerate() {
            t[i][j] = a - shift;
        }
        t[i][cols + i] = 1.0;
        t[i][width - 1] = 1.0;
    }
    for j in 0..cols {
        t[rows][j] = -1.0;
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    loop {
        let Some(enter) = (0..cols + rows).find(|&j| t[rows][j] < -PIVOT_TOL) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..rows {
            let a = t[i][enter];
            if a > PIVOT_TOL {
                let ratio = t[i][width - 1] / a;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best || (ratio == best && basis[i] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        // The shifted matrix is strictly positive, so the LP is bounded.
        let pr = leave.expect("bounded program always has a leaving row");
        let pivot = t[pr][enter];
        for v in t[pr].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = t[pr].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i == pr {
                continue;
            }
            let f = row[enter];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        basis[pr] = enter;
    }

    let mut y = vec![0.0; cols];
    for (i, &b) in basis.iter().enumerate() {
        if b < cols {
            y[b] = t[i][width - 1];
        }
    }
    let x: Vec<f64> = (0..rows).map(|i| t[rows][cols + i]).collect();
    let z = t[rows][width - 1];
    Ok(MatrixGameSolution {
        value: 1.0 / z + shift,
        row_strategy: to_distribution(&x),
        col_strategy: to_distribution(&y),
    })
}

fn to_distribution(v: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    clipped.iter().map(|x| x / total).collect()
}

/// Largest pure best-response gain of either player against the reported
/// value: `max(max_i (A q)_i − v, v − min_j (pᵀA)_j)`.
pub fn exploitability(payoff: &[Vec<f64>], solution: &MatrixGameSolution) -> f64 {
    let v = solution.value;
    let row_best = payoff
        .iter()
        .map(|r| r.iter().zip(&solution.col_strategy).map(|(a, q)| a * q).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let cols = payoff[0].len();
    let col_best = (0..cols)
        .map(|j| {
            payoff
                .iter()
                .zip(&solution.row_strategy)
                .map(|(r, p)| r[j] * p)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    (row_best - v).max(v - col_best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub discount: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub smoothing: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            discount: 0.95,
            tolerance: 1e-3,
            max_iterations: 100,
            smoothing: 0.05,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(domain(format!("discount {} outside [0, 1)", self.discount)));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(domain("tolerance and iteration cap must be positive"));
        }
        if !(0.0..1.0).contains(&self.smoothing) {
            return Err(domain(format!("smoothing {} outside [0, 1)", self.smoothing)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ShapleySolution {
    pub values: Vec<f64>,
    /// Equilibrium strategies of the last sweep, row player first.
    pub policies: [Policy; 2],
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm change of the last sweep.
    pub last_change: f64,
}

/// Stage game `Q(s, a, b) = r_0(s, a, b) + γ Σ P(s'|s, a, b) V(s')`.
pub fn stage_matrix(model: &StochasticGameModel, values: &[f64], discount: f64, state: usize) -> Vec<Vec<f64>> {
    let (na, nb) = (model.action_counts()[0], model.action_counts()[1]);
    (0..na)
        .map(|a| {
            (0..nb)
                .map(|b| {
                    let j = a * nb + b;
                    let cont: f64 = model.transition(state, j).iter().map(|&(s, p)| p * values[s]).sum();
                    model.reward(0, state, j) + discount * cont
                })
                .collect()
        })
        .collect()
}

/// One Shapley sweep: the per-state matrix-game solutions under `values`.
pub fn shapley_sweep(
    model: &StochasticGameModel,
    values: &[f64],
    discount: f64,
) -> Result<Vec<MatrixGameSolution>> {
    (0..model.num_states())
        .into_par_iter()
        .map(|s| matrix_game_solve(&stage_matrix(model, values, discount, s)))
        .collect()
}

/// Value iteration `V ← val(Q_V)` from `V = 0`. Uses player 0's rewards as
/// the row player's payoff; the model must be two-player zero-sum.
pub fn shapley_solve(model: &StochasticGameModel, config: &SolverConfig) -> Result<ShapleySolution> {
    config.validate()?;
    if !model.is_zero_sum() {
        return Err(domain("Shapley iteration needs a two-player zero-sum model"));
    }
    let mut values = vec![0.0; model.num_states()];
    let mut last = Vec::new();
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        last = shapley_sweep(model, &values, config.discount)?;
        iterations += 1;
        change = last
            .iter()
            .zip(&values)
            .map(|(sol, v)| (sol.value - v).abs())
            .fold(0.0, f64::max);
        for (v, sol) in values.iter_mut().zip(&last) {
            *v = sol.value;
        }
        if change < config.tolerance {
            break;
        }
    }
    let row = Policy::new(last.iter().map(|s| s.row_strategy.clone()).collect())?;
    let col = Policy::new(last.iter().map(|s| s.col_strategy.clone()).collect())?;
    Ok(ShapleySolution {
        values,
        policies: [row, col],
        iterations,
        converged: change < config.tolerance,
        last_change: change,
    })
}
