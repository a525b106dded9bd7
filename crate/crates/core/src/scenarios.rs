//! Ready-made games and generating strategies used by the experiments.

use crate::error::{domain, Result};
use crate::game::{ActionProfile, JointStrategy, NormalFormGame};

/// Whether a scenario's generating strategy is an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    Null,
    /// Some deviation gains at least `slack` in expectation.
    Alternative { slack: f64 },
}

/// A game together with the strategy that generates observed play.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub game: NormalFormGame,
    pub generating_strategy: JointStrategy,
    pub label: Label,
}

impl ScenarioSpec {
    pub fn new(game: NormalFormGame, generating_strategy: JointStrategy, label: Label) -> Result<Self> {
        if let Label::Alternative { slack } = label {
            if !(slack > 0.0 && slack <= 1.0) {
                return Err(domain(format!("slack {slack} outside (0, 1]")));
            }
        }
        Ok(Self {
            game,
            generating_strategy,
            label,
        })
    }
}

/// The 2x2 game with a unique, fully mixed Nash equilibrium.
pub fn weak_signal_game() -> NormalFormGame {
    NormalFormGame::bimatrix(
        &[vec![0.9, 0.2], vec![0.3, 0.7]],
        &[vec![0.5, 0.3], vec![0.2, 0.7]],
    )
    .expect("static game is valid")
}

/// `((5/7, 2/7), (5/11, 6/11))`.
pub fn weak_signal_nash() -> JointStrategy {
    JointStrategy::product(vec![
        vec![5.0 / 7.0, 2.0 / 7.0],
        vec![5.0 / 11.0, 6.0 / 11.0],
    ])
    .expect("static strategy is valid")
}

/// Profile with two balanced weak deviations (gains 0.03225 and 0.03325).
pub fn weak_signal_alternative() -> JointStrategy {
    JointStrategy::product(vec![vec![0.85, 0.15], vec![0.65, 0.35]]).expect("static strategy is valid")
}

/// Alternatives of the sensitivity grid: player 2 fixed at `(10/11, 1/11)`,
/// player 1 at `(1 - 2η, 2η)`, so that deviating to action 0 gains exactly `η`.
pub fn sensitivity_alternative(eta: f64) -> Result<JointStrategy> {
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(domain(format!("sensitivity slack {eta} outside (0, 0.5]")));
    }
    JointStrategy::product(vec![
        vec![1.0 - 2.0 * eta, 2.0 * eta],
        vec![10.0 / 11.0, 1.0 / 11.0],
    ])
}

/// Matching pennies on `[0, 1]` payoffs: player 1 wins on a match.
pub fn matching_pennies() -> NormalFormGame {
    NormalFormGame::bimatrix(
        &[vec![1.0, 0.0], vec![0.0, 1.0]],
        &[vec![0.0, 1.0], vec![1.0, 0.0]],
    )
    .expect("static game is valid")
}

/// Deterministic game where play is stuck on `(0, 0)` and player 1 would gain
/// exactly `eta` by switching to action 1.
pub fn slack_game(eta: f64) -> Result<ScenarioSpec> {
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(domain(format!("slack {eta} outside (0, 0.5]")));
    }
    let game = NormalFormGame::bimatrix(
        &[vec![0.5, 0.5], vec![0.5 + eta, 0.5]],
        &[vec![0.5, 0.5], vec![0.5, 0.5]],
    )?;
    let strategy = JointStrategy::point_mass(game.action_counts(), &ActionProfile(vec![0, 0]))?;
    ScenarioSpec::new(game, strategy, Label::Alternative { slack: eta })
}
