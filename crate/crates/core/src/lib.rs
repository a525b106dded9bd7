//! Sequential monitoring of equilibrium play.
//!
//! Normal-form games are watched with betting e-processes under FWER or
//! e-BH control; stochastic games with likelihood-ratio mixtures against
//! known deviation policies. The [`harness`] module drives the experiments.

pub mod env;
pub mod eprocess;
pub mod error;
pub mod game;
pub mod harness;
pub mod monitor;
pub mod scenarios;
pub mod stochastic;

pub use eprocess::{BettingMixture, EProcessState, MixtureKind};
pub use error::{Error, Result};
pub use game::{ActionProfile, EquilibriumConcept, JointStrategy, NormalFormGame};
pub use harness::{ExperimentConfig, ExperimentId, ExperimentOutput, RunRecord, Summary};
pub use monitor::{HypothesisId, HypothesisWeights, Monitor, MonitorConfig, MonitorMode, Procedure};
pub use stochastic::{LRMonitorState, Policy, StochasticGameModel};
