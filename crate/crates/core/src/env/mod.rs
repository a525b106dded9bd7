//! Simulation environments: grid soccer and predator-prey.

pub mod prey;
pub mod soccer;
pub mod trace;

pub use prey::{chase_policy, prey_step, prey_step_joint, PreyConfig, PreyState, PreyStep};
pub use soccer::{
    afraid_policy, afraid_transform, soccer_build_model, soccer_outcomes, soccer_step, Possession, SoccerRules,
    SoccerState, SoccerStep,
};
pub use trace::{write_trace_csv, TraceRow};
