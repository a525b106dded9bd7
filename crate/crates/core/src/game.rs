//! Finite normal-form games, joint strategies and exact payoff enumeration.
//!
//! Payoff tensors are dense and row-major: the last player's action varies
//! fastest. Every query enumerates the joint action space, which is fine at
//! desk scale (a handful of players with a few dozen actions each).

use rand::Rng;

use crate::error::{domain, shape, Result};

/// Tolerance used when validating that a distribution sums to one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Recommendations below this probability are ignored when conditioning.
pub const CONDITIONING_FLOOR: f64 = 1e-12;

/// A finite game with payoffs in `[0, 1]` for every player.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    action_counts: Vec<usize>,
    strides: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
}

impl NormalFormGame {
    /// Builds a game from per-player payoff tensors, each of length `Π |A_i|`.
    pub fn new(action_counts: Vec<usize>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if action_counts.is_empty() {
            return Err(shape("a game needs at least one player"));
        }
        if action_counts.iter().any(|&c| c == 0) {
            return Err(shape("every player needs at least one action"));
        }
        if payoffs.len() != action_counts.len() {
            return Err(shape(format!(
                "{} payoff tensors for {} players",
                payoffs.len(),
                action_counts.len()
            )));
        }
        let strides = strides_for(&action_counts);
        let size: usize = action_counts.iter().product();
        for (player, tensor) in payoffs.iter().enumerate() {
            if tensor.len() != size {
                return Err(shape(format!(
                    "payoff tensor of player {player} has {} entries, expected {size}",
                    tensor.len()
                )));
            }
            if let Some(bad) = tensor.iter().find(|u| !(0.0..=1.0).contains(*u)) {
                return Err(domain(format!("payoff {bad} of player {player} outside [0, 1]")));
            }
        }
        Ok(Self {
            action_counts,
            strides,
            payoffs,
        })
    }

    /// Two-player game from row-major payoff matrices (`u1[r][c]`, `u2[r][c]`).
    pub fn bimatrix(u1: &[Vec<f64>], u2: &[Vec<f64>]) -> Result<Self> {
        let rows = u1.len();
        let cols = u1.first().map_or(0, Vec::len);
        if u2.len() != rows || u1.iter().chain(u2).any(|r| r.len() != cols) {
            return Err(shape("bimatrix payoffs must share one rectangular shape"));
        }
        let flat = |m: &[Vec<f64>]| m.iter().flatten().copied().collect::<Vec<_>>();
        Self::new(vec![rows, cols], vec![flat(u1), flat(u2)])
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    /// Size of the joint action space.
    pub fn num_profiles(&self) -> usize {
        self.payoffs[0].len()
    }

    /// Raw payoff tensor of one player.
    pub fn payoff_tensor(&self, player: usize) -> &[f64] {
        &self.payoffs[player]
    }

    pub fn flat_index(&self, actions: &[usize]) -> usize {
        actions.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn profile_at(&self, mut index: usize) -> ActionProfile {
        let actions = self
            .strides
            .iter()
            .map(|s| {
                let a = index / s;
                index %= s;
                a
            })
            .collect();
        ActionProfile(actions)
    }

    /// `u_i(a)`.
    pub fn payoff(&self, player: usize, profile: &ActionProfile) -> f64 {
        self.payoffs[player][self.flat_index(&profile.0)]
    }

    /// `u_i(a_i', a_{-i})`: the payoff the player would have earned by playing
    /// `action` while everyone else keeps their realised action.
    pub fn counterfactual_payoff(&self, player: usize, profile: &ActionProfile, action: usize) -> f64 {
        let flat = self.flat_index(&profile.0);
        let own = profile.0[player];
        let stride = self.strides[player];
        self.payoffs[player][flat - own * stride + action * stride]
    }

    pub fn check_profile(&self, profile: &ActionProfile) -> Result<()> {
        if profile.0.len() != self.num_players() {
            return Err(shape(format!(
                "profile has {} actions for {} players",
                profile.0.len(),
                self.num_players()
            )));
        }
        for (i, (&a, &n)) in profile.0.iter().zip(&self.action_counts).enumerate() {
            if a >= n {
                return Err(shape(format!("action {a} of player {i} out of range 0..{n}")));
            }
        }
        Ok(())
    }

    pub(crate) fn check_player_action(&self, player: usize, action: usize) -> Result<()> {
        let n = *self
            .action_counts
            .get(player)
            .ok_or_else(|| shape(format!("player {player} out of range")))?;
        if action >= n {
            return Err(shape(format!("action {action} of player {player} out of range 0..{n}")));
        }
        Ok(())
    }

    fn check_strategy(&self, strategy: &JointStrategy) -> Result<()> {
        if strategy.action_counts() != self.action_counts.as_slice() {
            return Err(shape(format!(
                "strategy over {:?} does not match game over {:?}",
                strategy.action_counts(),
                self.action_counts
            )));
        }
        Ok(())
    }
}

fn strides_for(counts: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; counts.len()];
    for i in (0..counts.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * counts[i + 1];
    }
    strides
}

/// One action index per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActionProfile(pub Vec<usize>);

impl ActionProfile {
    pub fn actions(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for ActionProfile {
    fn from(actions: Vec<usize>) -> Self {
        Self(actions)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    /// Independent per-player mixed strategies.
    Product,
    /// Arbitrary joint distribution over action profiles.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Product(Vec<Vec<f64>>),
    Full { counts: Vec<usize>, probs: Vec<f64> },
}

/// A joint strategy, either a product of mixed strategies or a full joint law.
#[derive(Debug, Clone, PartialEq)]
pub struct JointStrategy {
    repr: Repr,
    counts: Vec<usize>,
}

impl JointStrategy {
    pub fn product(marginals: Vec<Vec<f64>>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(shape("product strategy needs at least one player"));
        }
        for (i, m) in marginals.iter().enumerate() {
            check_distribution(m).map_err(|e| domain(format!("player {i}: {e}")))?;
        }
        let counts = marginals.iter().map(Vec::len).collect();
        Ok(Self {
            repr: Repr::Product(marginals),
            counts,
        })
    }

    /// Full joint law indexed row-major like [`NormalFormGame`] tensors.
    pub fn full(action_counts: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let size: usize = action_counts.iter().product();
        if action_counts.is_empty() || size == 0 || probs.len() != size {
            return Err(shape(format!(
                "joint law has {} entries for action counts {action_counts:?}",
                probs.len()
            )));
        }
        check_distribution(&probs).map_err(domain)?;
        Ok(Self {
            repr: Repr::Full {
                counts: action_counts.clone(),
                probs,
            },
            counts: action_counts,
        })
    }

    /// Product point mass on one profile.
    pub fn point_mass(action_counts: &[usize], profile: &ActionProfile) -> Result<Self> {
        if profile.0.len() != action_counts.len() {
            return Err(shape("profile length differs from player count"));
        }
        let marginals = action_counts
            .iter()
            .zip(&profile.0)
            .map(|(&n, &a)| {
                if a >= n {
                    return Err(shape(format!("action {a} out of range 0..{n}")));
                }
                let mut row = vec![0.0; n];
                row[a] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::product(marginals)
    }

    pub fn kind(&self) -> StrategyKind {
        match self.repr {
            Repr::Product(_) => StrategyKind::Product,
            Repr::Full { .. } => StrategyKind::Full,
        }
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.counts
    }

    /// Probability of a joint profile.
    pub fn prob(&self, profile: &ActionProfile) -> f64 {
        match &self.repr {
            Repr::Product(m) => m.iter().zip(&profile.0).map(|(row, &a)| row[a]).product(),
            Repr::Full { counts, probs } => {
                let strides = strides_for(counts);
                let idx: usize = profile.0.iter().zip(&strides).map(|(a, s)| a * s).sum();
                probs[idx]
            }
        }
    }

    /// Marginal distribution of one player's action.
    pub fn marginal(&self, player: usize) -> Vec<f64> {
        match &self.repr {
            Repr::Product(m) => m[player].clone(),
            Repr::Full { counts, probs } => {
                let strides = strides_for(counts);
                let mut out = vec![0.0; counts[player]];
                for (idx, p) in probs.iter().enumerate() {
                    out[(idx / strides[player]) % counts[player]] += p;
                }
                out
            }
        }
    }

    /// Dense joint law, row-major.
    pub fn joint_probs(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Full { probs, .. } => probs.clone(),
            Repr::Product(m) => {
                let mut out = vec![1.0];
                for row in m {
                    out = out.iter().flat_map(|p| row.iter().map(move |q| p * q)).collect();
                }
                out
            }
        }
    }

    pub fn to_full(&self) -> Self {
        Self {
            repr: Repr::Full {
                counts: self.counts.clone(),
                probs: self.joint_probs(),
            },
            counts: self.counts.clone(),
        }
    }

    /// Draws one profile. Product strategies sample each player independently,
    /// in player order; full strategies sample the joint index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ActionProfile {
        match &self.repr {
            Repr::Product(m) => ActionProfile(m.iter().map(|row| sample_index(row, rng)).collect()),
            Repr::Full { counts, probs } => {
                let mut idx = sample_index(probs, rng);
                let strides = strides_for(counts);
                ActionProfile(
                    strides
                        .iter()
                        .map(|s| {
                            let a = idx / s;
                            idx %= s;
                            a
                        })
                        .collect(),
                )
            }
        }
    }
}

/// Inverse-CDF draw from a finite distribution. Falls back to the last index
/// with positive mass when rounding leaves the cumulative sum short of `u`.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

pub(crate) fn check_distribution(p: &[f64]) -> std::result::Result<(), String> {
    if p.is_empty() {
        return Err("empty distribution".into());
    }
    if let Some(bad) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(format!("probability {bad} is not a nonnegative real"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(format!("probabilities sum to {sum}, not 1"));
    }
    Ok(())
}

/// Equilibrium notion whose no-deviation conditions are checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumConcept {
    Nash,
    CoarseCorrelated,
    Correlated,
}

/// Exact `E_{a~π}[u_i(a)]` by enumeration.
pub fn expected_payoff(game: &NormalFormGame, strategy: &JointStrategy, player: usize) -> Result<f64> {
    game.check_strategy(strategy)?;
    if player >= game.num_players() {
        return Err(shape(format!("player {player} out of range")));
    }
    let probs = strategy.joint_probs();
    Ok(probs
        .iter()
        .zip(game.payoff_tensor(player))
        .map(|(p, u)| p * u)
        .sum())
}

/// `E[u_i(a_i', a_{-i})] - E[u_i(a_i, a_{-i})]`: positive means always playing
/// `deviation` would have been profitable.
pub fn deviation_gain(
    game: &NormalFormGame,
    strategy: &JointStrategy,
    player: usize,
    deviation: usize,
) -> Result<f64> {
    game.check_strategy(strategy)?;
    game.check_player_action(player, deviation)?;
    let probs = strategy.joint_probs();
    let mut gain = 0.0;
    for (idx, p) in probs.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let profile = game.profile_at(idx);
        gain += p * (game.counterfactual_payoff(player, &profile, deviation) - game.payoff(player, &profile));
    }
    Ok(gain)
}

/// Gain from switching to `deviation` whenever `recommendation` is drawn,
/// conditional on that recommendation. `None` if the recommendation has
/// probability below [`CONDITIONING_FLOOR`].
pub fn conditional_deviation_gain(
    game: &NormalFormGame,
    strategy: &JointStrategy,
    player: usize,
    recommendation: usize,
    deviation: usize,
) -> Result<Option<f64>> {
    game.check_strategy(strategy)?;
    game.check_player_action(player, recommendation)?;
    game.check_player_action(player, deviation)?;
    let probs = strategy.joint_probs();
    let mut mass = 0.0;
    let mut gain = 0.0;
    for (idx, p) in probs.iter().enumerate() {
        let profile = game.profile_at(idx);
        if profile.0[player] != recommendation {
            continue;
        }
        mass += p;
        gain += p * (game.counterfactual_payoff(player, &profile, deviation) - game.payoff(player, &profile));
    }
    Ok((mass >= CONDITIONING_FLOOR).then(|| gain / mass))
}

/// Largest deviation gain over every hypothesis of the chosen concept. A
/// value `<= 0` certifies the equilibrium; a value `<= ε` certifies an
/// ε-equilibrium.
pub fn equilibrium_slack(
    game: &NormalFormGame,
    strategy: &JointStrategy,
    concept: EquilibriumConcept,
) -> Result<f64> {
    game.check_strategy(strategy)?;
    let mut worst = f64::NEG_INFINITY;
    for (player, &n) in game.action_counts().iter().enumerate() {
        for deviation in 0..n {
            match concept {
                EquilibriumConcept::Nash | EquilibriumConcept::CoarseCorrelated => {
                    worst = worst.max(deviation_gain(game, strategy, player, deviation)?);
                }
                EquilibriumConcept::Correlated => {
                    for rec in 0..n {
                        if let Some(g) = conditional_deviation_gain(game, strategy, player, rec, deviation)? {
                            worst = worst.max(g);
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nash_payoff_matches_indifference_value() {
        let g = scenarios::weak_signal_game();
        let v = expected_payoff(&g, &scenarios::weak_signal_nash(), 0).unwrap();
        assert!((v - 5.7 / 11.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn point_mass_payoff_is_entry() {
        let g = scenarios::weak_signal_game();
        let a = ActionProfile(vec![1, 0]);
        let s = JointStrategy::point_mass(g.action_counts(), &a).unwrap();
        assert_eq!(expected_payoff(&g, &s, 0).unwrap(), 0.3);
        assert_eq!(expected_payoff(&g, &s, 1).unwrap(), 0.2);
        assert_eq!(deviation_gain(&g, &s, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn constant_game() {
        let g = NormalFormGame::new(vec![3, 2], vec![vec![0.5; 6], vec![0.5; 6]]).unwrap();
        let s = JointStrategy::product(vec![vec![0.2, 0.3, 0.5], vec![0.9, 0.1]]).unwrap();
        assert!((expected_payoff(&g, &s, 1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn nash_has_no_profitable_deviation() {
        let g = scenarios::weak_signal_game();
        let s = scenarios::weak_signal_nash();
        for p in 0..2 {
            for d in 0..2 {
                assert!(deviation_gain(&g, &s, p, d).unwrap() <= 1e-12);
            }
        }
        assert!(equilibrium_slack(&g, &s, EquilibriumConcept::Nash).unwrap() <= 1e-12);
    }

    #[test]
    fn alternative_slack_is_largest_gain() {
        let g = scenarios::weak_signal_game();
        let s = scenarios::weak_signal_alternative();
        let slack = equilibrium_slack(&g, &s, EquilibriumConcept::Nash).unwrap();
        assert!((slack - 0.03325).abs() < 1e-12);
    }

    #[test]
    fn matching_pennies_uniform_is_cce() {
        let g = scenarios::matching_pennies();
        let s = JointStrategy::full(vec![2, 2], vec![0.25; 4]).unwrap();
        let slack = equilibrium_slack(&g, &s, EquilibriumConcept::CoarseCorrelated).unwrap();
        assert!(slack.abs() < 1e-15);
        let ce = equilibrium_slack(&g, &s, EquilibriumConcept::Correlated).unwrap();
        assert!(ce.abs() < 1e-15);
    }

    #[test]
    fn ce_skips_zero_probability_recommendations() {
        let g = scenarios::weak_signal_game();
        // Player 0 never receives recommendation 1.
        let s = JointStrategy::full(vec![2, 2], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(conditional_deviation_gain(&g, &s, 0, 1, 0).unwrap(), None);
        assert!(equilibrium_slack(&g, &s, EquilibriumConcept::Correlated).unwrap().is_finite());
    }

    #[test]
    fn rejects_unnormalized_and_out_of_range() {
        assert!(JointStrategy::product(vec![vec![0.5, 0.5 + 1e-9]]).is_err());
        assert!(JointStrategy::product(vec![vec![1.5, -0.5]]).is_err());
        assert!(NormalFormGame::new(vec![2], vec![vec![0.0, 1.2]]).is_err());
        assert!(NormalFormGame::new(vec![2, 2], vec![vec![0.0; 4]]).is_err());
        let g = scenarios::weak_signal_game();
        let wrong = JointStrategy::product(vec![vec![1.0], vec![1.0]]).unwrap();
        assert!(expected_payoff(&g, &wrong, 0).is_err());
        assert!(deviation_gain(&g, &scenarios::weak_signal_nash(), 0, 2).is_err());
    }

    #[test]
    fn full_marginals_and_index_roundtrip() {
        let s = JointStrategy::product(vec![vec![0.25, 0.75], vec![0.1, 0.2, 0.7]]).unwrap();
        let full = s.to_full();
        assert_eq!(full.kind(), StrategyKind::Full);
        for p in 0..2 {
            for (a, b) in s.marginal(p).iter().zip(full.marginal(p)) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        let g = NormalFormGame::new(vec![2, 3, 2], vec![vec![0.0; 12]; 3]).unwrap();
        for idx in 0..12 {
            assert_eq!(g.flat_index(g.profile_at(idx).actions()), idx);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_calibrated() {
        let s = JointStrategy::product(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| s.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            let a = s.sample(&mut rng);
            counts[a.0[0] * 2 + a.0[1]] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.01);
        }

        let pm = JointStrategy::point_mass(&[3, 2], &ActionProfile(vec![2, 1])).unwrap();
        assert!((0..50).all(|_| pm.sample(&mut rng) == ActionProfile(vec![2, 1])));
        let full = JointStrategy::full(vec![2, 2], vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(full.sample(&mut rng), ActionProfile(vec![1, 0]));
    }
}
