//! Betting e-processes for a single deviation hypothesis.
//!
//! Each round turns a regret-like increment `x` into the e-value `1 - λx`.
//! Wealth for every betting fraction `λ` is tracked as a log-product, and the
//! mixture over `λ` is formed with a max-shifted log-sum-exp so that
//! thousands of rounds neither overflow nor underflow.

use crate::error::{domain, shape, Error, Result};
use crate::game::{ActionProfile, NormalFormGame, NORMALIZATION_TOL};

/// Node count of the midpoint grid used when monitoring.
pub const DEFAULT_MONITOR_NODES: usize = 101;
/// Node count of the midpoint grid used for oracle comparisons.
pub const ORACLE_NODES: usize = 1001;
/// Longest stream accepted by [`exact_uniform_mixture`].
pub const EXACT_MIXTURE_MAX_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixtureKind {
    Dirac,
    Grid,
}

/// Distribution `ν` over betting fractions, either a point mass or a finite
/// grid of strictly increasing nodes in `(0, 1]` with weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct BettingMixture {
    kind: MixtureKind,
    lambdas: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl BettingMixture {
    pub fn dirac(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self {
            kind: MixtureKind::Dirac,
            lambdas: vec![lambda],
            weights: vec![1.0],
            log_weights: vec![0.0],
        })
    }

    pub fn grid(lambdas: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != weights.len() {
            return Err(shape(format!(
                "{} nodes with {} weights",
                lambdas.len(),
                weights.len()
            )));
        }
        for &l in &lambdas {
            check_lambda(l)?;
        }
        if lambdas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("grid nodes must be strictly increasing"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(domain("grid weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(domain(format!("grid weights sum to {total}")));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            kind: MixtureKind::Grid,
            lambdas,
            weights,
            log_weights,
        })
    }

    /// Midpoint rule for the uniform distribution on `(0, 1]`: nodes
    /// `(j + 1/2) / G` with equal weights `1 / G`.
    pub fn uniform_midpoints(nodes: usize) -> Result<Self> {
        if nodes == 0 {
            return Err(shape("uniform grid needs at least one node"));
        }
        let g = nodes as f64;
        let lambdas = (0..nodes).map(|j| (j as f64 + 0.5) / g).collect();
        // Equal weights summed left to right can drift from 1 by a few ulps,
        // so normalise against the actual sum.
        let mut weights = vec![1.0 / g; nodes];
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self::grid(lambdas, weights)
    }

    /// Clamps every node to at most `cap`, merging nodes that collapse onto
    /// the cap. Needed when increments can exceed 1.
    pub fn capped(&self, cap: f64) -> Result<Self> {
        check_lambda(cap)?;
        if self.lambdas.iter().all(|&l| l <= cap) {
            return Ok(self.clone());
        }
        match self.kind {
            MixtureKind::Dirac => Self::dirac(cap),
            MixtureKind::Grid => {
                let mut lambdas = Vec::new();
                let mut weights = Vec::new();
                for (&l, &w) in self.lambdas.iter().zip(&self.weights) {
                    if l < cap {
                        lambdas.push(l);
                        weights.push(w);
                    } else if lambdas.last() == Some(&cap) {
                        *weights.last_mut().expect("non-empty") += w;
                    } else {
                        lambdas.push(cap);
                        weights.push(w);
                    }
                }
                let total: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= total);
                Self::grid(lambdas, weights)
            }
        }
    }

    pub fn kind(&self) -> MixtureKind {
        self.kind
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("betting fraction {lambda} outside (0, 1]")))
    }
}

/// Regret-like increment `u_i(a_t) - u_i(a', a_{-i,t}) + shift`.
pub fn increment(
    game: &NormalFormGame,
    profile: &ActionProfile,
    player: usize,
    deviation: usize,
    eps_shift: f64,
) -> Result<f64> {
    game.check_profile(profile)?;
    game.check_player_action(player, deviation)?;
    if !(eps_shift >= 0.0 && eps_shift.is_finite()) {
        return Err(domain(format!("shift {eps_shift} must be a nonnegative real")));
    }
    Ok(game.payoff(player, profile) - game.counterfactual_payoff(player, profile, deviation) + eps_shift)
}

/// Single-round e-value `1 - λx`.
pub fn evalue(x: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(-1.0..=1.0).contains(&x) {
        return Err(domain(format!("increment {x} outside [-1, 1]")));
    }
    Ok((1.0 - lambda * x).max(0.0))
}

/// Kelly-optimal fraction against the worst alternative with slack `eta`.
pub fn optimal_lambda(eta: f64) -> Result<f64> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(eta)
    } else {
        Err(domain(format!("slack {eta} outside (0, 1]")))
    }
}

/// Ceiling on the expected crossing time of level `b` for the uniform
/// mixture under an alternative with slack `eta`:
/// `12 (ln b + ln(4/η) + ln(3/2)) / η²`.
pub fn detection_bound_uniform(b: f64, eta: f64) -> Result<f64> {
    if !(b > 1.0) {
        return Err(domain(format!("threshold {b} must exceed 1")));
    }
    optimal_lambda(eta)?;
    Ok(12.0 * (b.ln() + (4.0 / eta).ln() + 1.5f64.ln()) / (eta * eta))
}

/// Exact stopping time `⌈ln b / ln(1 + λη)⌉` of a fixed-λ process fed the
/// constant increment `-η`.
pub fn slack_lower_bound(b: f64, lambda: f64, eta: f64) -> Result<u64> {
    if !(b > 1.0) {
        return Err(domain(format!("threshold {b} must exceed 1")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(domain(format!("betting fraction {lambda} outside (0, 1)")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(domain(format!("slack {eta} must be positive")));
    }
    let steps = (b.ln() / (lambda * eta).ln_1p()).ceil();
    Ok((steps as u64).max(1))
}

/// Exact `∫₀¹ Π_s (1 - λ x_s) dλ` by expanding the product into a polynomial
/// in `λ` and integrating term by term.
pub fn exact_uniform_mixture(xs: &[f64]) -> Result<f64> {
    if xs.len() > EXACT_MIXTURE_MAX_LEN {
        return Err(Error::Capacity(format!(
            "stream of length {} exceeds {EXACT_MIXTURE_MAX_LEN}",
            xs.len()
        )));
    }
    let mut coeffs = vec![1.0];
    for &x in xs {
        let mut next = vec![0.0; coeffs.len() + 1];
        for (k, c) in coeffs.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= x * c;
        }
        coeffs = next;
    }
    Ok(coeffs.iter().enumerate().map(|(k, c)| c / (k as f64 + 1.0)).sum())
}

/// Wealth of one hypothesis under a betting mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct EProcessState {
    log_wealth: Vec<f64>,
    dead: Vec<bool>,
    round: u64,
    log_value: f64,
    log_running_max: f64,
    log_threshold: Option<f64>,
    crossing_time: Option<u64>,
}

impl EProcessState {
    pub fn new(mixture: &BettingMixture) -> Self {
        Self {
            log_wealth: vec![0.0; mixture.len()],
            dead: vec![false; mixture.len()],
            round: 0,
            log_value: 0.0,
            log_running_max: 0.0,
            log_threshold: None,
            crossing_time: None,
        }
    }

    /// Fresh state that records the first round its value reaches `threshold`.
    pub fn with_threshold(mixture: &BettingMixture, threshold: f64) -> Self {
        let mut s = Self::new(mixture);
        s.log_threshold = Some(threshold.ln());
        s
    }

    /// Folds one increment into every per-λ wealth.
    pub fn update(&mut self, x: f64, mixture: &BettingMixture) -> Result<()> {
        if mixture.len() != self.log_wealth.len() {
            return Err(shape(format!(
                "mixture has {} nodes, state tracks {}",
                mixture.len(),
                self.log_wealth.len()
            )));
        }
        if !x.is_finite() {
            return Err(domain(format!("increment {x} is not finite")));
        }
        for (j, &lambda) in mixture.lambdas.iter().enumerate() {
            if self.dead[j] {
                continue;
            }
            let factor = 1.0 - lambda * x;
            if factor < -1e-12 {
                return Err(domain(format!("e-value 1 - {lambda}*{x} is negative")));
            }
            if factor <= 0.0 {
                self.dead[j] = true;
                self.log_wealth[j] = f64::NEG_INFINITY;
            } else {
                self.log_wealth[j] += (-lambda * x).ln_1p();
            }
        }
        self.round += 1;
        self.log_value = log_mixture(&self.log_wealth, &self.dead, &mixture.log_weights);
        if self.log_value > self.log_running_max {
            self.log_running_max = self.log_value;
        }
        if let (None, Some(t)) = (self.crossing_time, self.log_threshold) {
            if self.log_value >= t {
                self.crossing_time = Some(self.round);
            }
        }
        Ok(())
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// `M_t(ν)`.
    pub fn mixture_value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn log_value(&self) -> f64 {
        self.log_value
    }

    /// `sup_{s ≤ t} M_s(ν)`.
    pub fn running_max(&self) -> f64 {
        self.log_running_max.exp()
    }

    pub fn log_running_max(&self) -> f64 {
        self.log_running_max
    }

    pub fn crossing_time(&self) -> Option<u64> {
        self.crossing_time
    }

    pub fn log_wealth(&self) -> &[f64] {
        &self.log_wealth
    }

    pub fn dead(&self) -> &[bool] {
        &self.dead
    }

    pub fn threshold(&self) -> Option<f64> {
        self.log_threshold.map(f64::exp)
    }

    /// Reassembles a state from its serialised parts.
    pub(crate) fn from_parts(
        log_wealth: Vec<f64>,
        dead: Vec<bool>,
        round: u64,
        log_running_max: f64,
        log_threshold: Option<f64>,
        crossing_time: Option<u64>,
        mixture: &BettingMixture,
    ) -> Result<Self> {
        if log_wealth.len() != mixture.len() || dead.len() != mixture.len() {
            return Err(shape("snapshot wealth does not match mixture"));
        }
        let log_value = if round == 0 {
            0.0
        } else {
            log_mixture(&log_wealth, &dead, &mixture.log_weights)
        };
        Ok(Self {
            log_wealth,
            dead,
            round,
            log_value,
            log_running_max,
            log_threshold,
            crossing_time,
        })
    }
}

/// Returns the updated copy; see [`EProcessState::update`].
pub fn eprocess_update(state: &EProcessState, x: f64, mixture: &BettingMixture) -> Result<EProcessState> {
    let mut next = state.clone();
    next.update(x, mixture)?;
    Ok(next)
}

/// `M_t(ν)` of a state.
pub fn mixture_value(state: &EProcessState) -> f64 {
    state.mixture_value()
}

fn log_mixture(log_wealth: &[f64], dead: &[bool], log_weights: &[f64]) -> f64 {
    let terms = || {
        log_wealth
            .iter()
            .zip(dead)
            .zip(log_weights)
            .filter(|((_, d), lw)| !**d && lw.is_finite())
            .map(|((w, _), lw)| w + lw)
    };
    let max = terms().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms().map(|v| (v - max).exp()).sum::<f64>().ln()
}
