//! Stochastic games: tabular models, likelihood-ratio monitors, solvers and
//! divergence diagnostics.

pub mod divergence;
pub mod lr;
pub mod model;
pub mod solver;

pub use divergence::{
    chi_square_div, kl_divergence, kl_quadratic_check, state_avg_kl, stationary_distribution, support_violation,
    QuadraticCheckRow,
};
pub use lr::{lr_detection_bound, lr_evalue, lr_step, overshoot_constant, LRMonitorState};
pub use model::{mixture_policy, smooth_policy, Policy, StochasticGameModel};
pub use solver::{
    exploitability, matrix_game_solve, shapley_solve, shapley_sweep, stage_matrix, MatrixGameSolution,
    ShapleySolution, SolverConfig,
};
