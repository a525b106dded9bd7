//! Sequential decision layer over a bank of per-deviation e-processes.
//!
//! The FWER procedure stops the first round any e-process reaches
//! `b = m / α`. The FDR procedure runs the e-BH rule on running suprema, so
//! its rejection sets only ever grow. With uniform weights the e-BH level
//! for `k = 1` is computed by the same expression as `b`, which makes the
//! FDR alarm provably no later than the FWER one even in floating point.

use std::fmt::{self, Write as _};

use crate::eprocess::{BettingMixture, EProcessState, MixtureKind};
use crate::error::{domain, shape, Error, Result};
use crate::game::{ActionProfile, NormalFormGame, NORMALIZATION_TOL};

const SNAPSHOT_HEADER: &str = "eqsentinel-monitor-snapshot v1";

/// A single deviation hypothesis `H_i^{(a_i')}`, optionally conditioned on
/// the recommended action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HypothesisId {
    pub player: usize,
    pub deviation: usize,
    pub condition: Option<usize>,
}

impl fmt::Display for HypothesisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.condition {
            Some(c) => write!(f, "p{}:{}->{}", self.player, c, self.deviation),
            None => write!(f, "p{}->{}", self.player, self.deviation),
        }
    }
}

/// Which equilibrium the monitored play is assumed to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum MonitorMode {
    #[default]
    Nash,
    Cce,
    /// Correlated equilibrium tested through unconditional deviations.
    Ce,
    /// Correlated equilibrium with one hypothesis per (recommendation, deviation).
    CeConditional,
    /// ε-approximate Nash: increments are shifted up by ε.
    EpsApprox(f64),
}

impl MonitorMode {
    pub fn eps_shift(&self) -> f64 {
        match self {
            MonitorMode::EpsApprox(eps) => *eps,
            _ => 0.0,
        }
    }
}

impl fmt::Display for MonitorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonitorMode::Nash => f.write_str("nash"),
            MonitorMode::Cce => f.write_str("cce"),
            MonitorMode::Ce => f.write_str("ce"),
            MonitorMode::CeConditional => f.write_str("ce-conditional"),
            MonitorMode::EpsApprox(eps) => write!(f, "eps:{eps:?}"),
        }
    }
}

impl std::str::FromStr for MonitorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "nash" => MonitorMode::Nash,
            "cce" => MonitorMode::Cce,
            "ce" => MonitorMode::Ce,
            "ce-conditional" | "ce_conditional" => MonitorMode::CeConditional,
            other => {
                let eps = other
                    .strip_prefix("eps:")
                    .ok_or_else(|| Error::Parse(format!("unknown monitor mode `{other}`")))?;
                let eps: f64 = eps
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad epsilon in mode `{other}`")))?;
                if !(eps >= 0.0 && eps < 1.0) {
                    return Err(domain(format!("epsilon {eps} outside [0, 1)")));
                }
                MonitorMode::EpsApprox(eps)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Procedure {
    Fwer,
    Fdr,
}

/// Allocation of the α budget across hypotheses for e-BH.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum HypothesisWeights {
    #[default]
    Uniform,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorConfig {
    pub alpha: f64,
    pub mode: MonitorMode,
    pub mixture: BettingMixture,
    pub weights: HypothesisWeights,
    pub procedure: Procedure,
}

impl MonitorConfig {
    pub fn new(alpha: f64, mixture: BettingMixture, procedure: Procedure) -> Self {
        Self {
            alpha,
            mode: MonitorMode::Nash,
            mixture,
            weights: HypothesisWeights::Uniform,
            procedure,
        }
    }

    pub fn with_mode(mut self, mode: MonitorMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_weights(mut self, weights: HypothesisWeights) -> Self {
        self.weights = weights;
        self
    }

    fn validate(&self, m: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(domain(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if let HypothesisWeights::Custom(w) = &self.weights {
            if w.len() != m {
                return Err(shape(format!("{} weights for {m} hypotheses", w.len())));
            }
            if w.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
                return Err(domain("e-BH weights must lie in (0, 1]"));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(domain(format!("e-BH weights sum to {total}")));
            }
        }
        if let MonitorMode::EpsApprox(eps) = self.mode {
            if !(eps >= 0.0 && eps < 1.0) {
                return Err(domain(format!("epsilon {eps} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// FWER threshold `b = m / α`.
pub fn fwer_threshold(m: usize, alpha: f64) -> f64 {
    m as f64 / alpha
}

/// e-BH level `1 / (k α γ)` for one hypothesis; under uniform weights this is
/// `m / (k α)`, which coincides exactly with [`fwer_threshold`] at `k = 1`.
fn ebh_level(k: usize, alpha: f64, weights: &[f64], uniform: bool, h: usize) -> f64 {
    if uniform {
        weights.len() as f64 / (k as f64 * alpha)
    } else {
        1.0 / (k as f64 * alpha * weights[h])
    }
}

fn is_uniform(weights: &[f64]) -> bool {
    weights.windows(2).all(|w| w[0] == w[1])
}

/// Descending scan over `k = m, …, 1` for the largest `k` with `N(k) ≥ k`.
fn ebh_scan(m: usize, crosses: impl Fn(usize, usize) -> bool) -> (usize, Vec<usize>) {
    for k in (1..=m).rev() {
        let hits: Vec<usize> = (0..m).filter(|&h| crosses(h, k)).collect();
        if hits.len() >= k {
            return (k, hits);
        }
    }
    (0, Vec::new())
}

/// e-BH on running suprema: returns `k = max{k : N(k) ≥ k}` (0 when empty)
/// and the indices of hypotheses whose supremum reaches their level-`k`
/// threshold.
pub fn ebh_rejection(maxima: &[f64], alpha: f64, weights: &[f64]) -> Result<(usize, Vec<usize>)> {
    if maxima.len() != weights.len() {
        return Err(shape(format!(
            "{} suprema with {} weights",
            maxima.len(),
            weights.len()
        )));
    }
    let uniform = is_uniform(weights);
    Ok(ebh_scan(maxima.len(), |h, k| {
        maxima[h] >= ebh_level(k, alpha, weights, uniform, h)
    }))
}

/// Hypothesis set of an equilibrium mode.
pub fn enumerate_hypotheses(game: &NormalFormGame, mode: MonitorMode) -> Vec<HypothesisId> {
    let mut out = Vec::new();
    for (player, &n) in game.action_counts().iter().enumerate() {
        match mode {
            MonitorMode::CeConditional => {
                for rec in 0..n {
                    for deviation in (0..n).filter(|&d| d != rec) {
                        out.push(HypothesisId {
                            player,
                            deviation,
                            condition: Some(rec),
                        });
                    }
                }
            }
            _ => out.extend((0..n).map(|deviation| HypothesisId {
                player,
                deviation,
                condition: None,
            })),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejection {
    pub hypothesis: HypothesisId,
    pub round: u64,
}

/// Decision state shared by both procedures.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RejectionState {
    /// Current e-BH level; 0 while nothing is rejected.
    pub k: usize,
    /// Rejected hypotheses in order of first rejection.
    pub rejected: Vec<Rejection>,
    /// FWER stopping round.
    pub stopped: Option<u64>,
    /// First round with a nonempty rejection set.
    pub first_alarm: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FwerDecision {
    Continue,
    /// Every hypothesis at or above `b` on the stopping round.
    Reject { round: u64, hypotheses: Vec<HypothesisId> },
}

/// Sequential equilibrium monitor over every deviation hypothesis of a game.
#[derive(Debug, Clone)]
pub struct Monitor {
    game: NormalFormGame,
    config: MonitorConfig,
    hypotheses: Vec<HypothesisId>,
    mixture: BettingMixture,
    states: Vec<EProcessState>,
    crossing: Vec<Option<u64>>,
    weights: Vec<f64>,
    uniform: bool,
    round: u64,
    rejection: RejectionState,
}

impl Monitor {
    pub fn new(game: NormalFormGame, config: MonitorConfig) -> Result<Self> {
        let hypotheses = enumerate_hypotheses(&game, config.mode);
        let m = hypotheses.len();
        config.validate(m)?;
        let eps = config.mode.eps_shift();
        // With increments up to 1 + ε the e-value stays nonnegative only for
        // λ ≤ 1 / (1 + ε).
        let mixture = if eps > 0.0 {
            config.mixture.capped(1.0 / (1.0 + eps))?
        } else {
            config.mixture.clone()
        };
        let (weights, uniform) = match &config.weights {
            HypothesisWeights::Uniform => (vec![1.0 / m as f64; m], true),
            HypothesisWeights::Custom(w) => (w.clone(), is_uniform(w)),
        };
        let states = vec![EProcessState::new(&mixture); m];
        Ok(Self {
            game,
            config,
            hypotheses,
            mixture,
            states,
            crossing: vec![None; m],
            weights,
            uniform,
            round: 0,
            rejection: RejectionState::default(),
        })
    }

    pub fn hypotheses(&self) -> &[HypothesisId] {
        &self.hypotheses
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    /// Mixture actually used for betting (after any ε cap).
    pub fn mixture(&self) -> &BettingMixture {
        &self.mixture
    }

    pub fn game(&self) -> &NormalFormGame {
        &self.game
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn states(&self) -> &[EProcessState] {
        &self.states
    }

    pub fn rejection(&self) -> &RejectionState {
        &self.rejection
    }

    pub fn threshold(&self) -> f64 {
        fwer_threshold(self.hypotheses.len(), self.config.alpha)
    }

    /// First round each hypothesis reached `b = m / α`.
    pub fn crossing_times(&self) -> &[Option<u64>] {
        &self.crossing
    }

    /// e-BH level of hypothesis `h` at `k`.
    pub fn ebh_threshold(&self, k: usize, h: usize) -> f64 {
        ebh_level(k, self.config.alpha, &self.weights, self.uniform, h)
    }

    fn observe(&mut self, profile: &ActionProfile) -> Result<()> {
        self.game.check_profile(profile)?;
        let eps = self.config.mode.eps_shift();
        let log_b = self.threshold().ln();
        self.round += 1;
        for (h, id) in self.hypotheses.iter().enumerate() {
            let own = profile.0[id.player];
            if id.condition.is_some_and(|c| c != own) {
                continue;
            }
            let x = self.game.payoff(id.player, profile)
                - self.game.counterfactual_payoff(id.player, profile, id.deviation)
                + eps;
            let state = &mut self.states[h];
            state.update(x, &self.mixture)?;
            if self.crossing[h].is_none() && state.log_value() >= log_b {
                self.crossing[h] = Some(self.round);
            }
        }
        Ok(())
    }

    /// One FWER round: updates every e-process and rejects when any reaches `b`.
    pub fn fwer_step(&mut self, profile: &ActionProfile) -> Result<FwerDecision> {
        if self.config.procedure != Procedure::Fwer {
            return Err(Error::State("fwer_step on an FDR monitor".into()));
        }
        if let Some(t) = self.rejection.stopped {
            return Err(Error::State(format!("monitor already stopped at round {t}")));
        }
        self.observe(profile)?;
        let round = self.round;
        let hits: Vec<HypothesisId> = self
            .crossing
            .iter()
            .zip(&self.hypotheses)
            .filter(|(c, _)| **c == Some(round))
            .map(|(_, id)| *id)
            .collect();
        if hits.is_empty() {
            return Ok(FwerDecision::Continue);
        }
        self.rejection.stopped = Some(round);
        self.rejection.first_alarm = Some(round);
        self.rejection.k = 1;
        self.rejection.rejected = hits
            .iter()
            .map(|&hypothesis| Rejection { hypothesis, round })
            .collect();
        Ok(FwerDecision::Reject {
            round,
            hypotheses: hits,
        })
    }

    /// One e-BH round; the monitor never stops on its own.
    pub fn fdr_step(&mut self, profile: &ActionProfile) -> Result<&RejectionState> {
        if self.config.procedure != Procedure::Fdr {
            return Err(Error::State("fdr_step on an FWER monitor".into()));
        }
        self.observe(profile)?;
        let m = self.hypotheses.len();
        let log_max: Vec<f64> = self.states.iter().map(EProcessState::log_running_max).collect();
        let (k, hits) = ebh_scan(m, |h, k| log_max[h] >= self.ebh_threshold(k, h).ln());
        self.rejection.k = k;
        for h in hits {
            let id = self.hypotheses[h];
            if !self.rejection.rejected.iter().any(|r| r.hypothesis == id) {
                self.rejection.rejected.push(Rejection {
                    hypothesis: id,
                    round: self.round,
                });
            }
        }
        if self.rejection.first_alarm.is_none() && !self.rejection.rejected.is_empty() {
            self.rejection.first_alarm = Some(self.round);
        }
        Ok(&self.rejection)
    }

    /// Versioned text snapshot of the full monitor state.
    pub fn snapshot(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<u64>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
        writeln!(s, "{SNAPSHOT_HEADER}").unwrap();
        let proc = match self.config.procedure {
            Procedure::Fwer => "fwer",
            Procedure::Fdr => "fdr",
        };
        writeln!(s, "procedure {proc}").unwrap();
        writeln!(s, "alpha {:?}", self.config.alpha).unwrap();
        writeln!(s, "mode {}", self.config.mode).unwrap();
        write_mixture(&mut s, &self.config.mixture);
        match &self.config.weights {
            HypothesisWeights::Uniform => writeln!(s, "weights uniform").unwrap(),
            HypothesisWeights::Custom(w) => {
                write!(s, "weights custom").unwrap();
                for g in w {
                    write!(s, " {g:?}").unwrap();
                }
                writeln!(s).unwrap();
            }
        }
        writeln!(s, "round {}", self.round).unwrap();
        writeln!(s, "k {}", self.rejection.k).unwrap();
        writeln!(s, "stopped {}", opt(self.rejection.stopped)).unwrap();
        writeln!(s, "first_alarm {}", opt(self.rejection.first_alarm)).unwrap();
        writeln!(s, "rejected {}", self.rejection.rejected.len()).unwrap();
        for r in &self.rejection.rejected {
            let idx = self.index_of(r.hypothesis);
            writeln!(s, "r {idx} {}", r.round).unwrap();
        }
        writeln!(s, "hypotheses {}", self.hypotheses.len()).unwrap();
        for (h, id) in self.hypotheses.iter().enumerate() {
            let st = &self.states[h];
            let cond = id.condition.map_or_else(|| "-".to_string(), |c| c.to_string());
            write!(
                s,
                "h {} {} {cond} {} {:?} {}",
                id.player,
                id.deviation,
                st.round(),
                st.log_running_max(),
                opt(self.crossing[h])
            )
            .unwrap();
            for (w, d) in st.log_wealth().iter().zip(st.dead()) {
                if *d {
                    write!(s, " dead").unwrap();
                } else {
                    write!(s, " {w:?}").unwrap();
                }
            }
            writeln!(s).unwrap();
        }
        s
    }

    fn index_of(&self, id: HypothesisId) -> usize {
        self.hypotheses.iter().position(|h| *h == id).expect("known hypothesis")
    }

    /// Restores a monitor written by [`Monitor::snapshot`] for the same game.
    pub fn restore(game: NormalFormGame, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |what: &str| -> Result<Vec<&str>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("snapshot ends before `{what}`")))?;
            Ok(line.split_whitespace().collect())
        };
        let header = next("header")?.join(" ");
        if header != SNAPSHOT_HEADER {
            return Err(Error::Parse(format!("unsupported snapshot header `{header}`")));
        }
        let procedure = match keyed(&next("procedure")?, "procedure")?[0] {
            "fwer" => Procedure::Fwer,
            "fdr" => Procedure::Fdr,
            other => return Err(Error::Parse(format!("unknown procedure `{other}`"))),
        };
        let alpha = parse_f64(keyed(&next("alpha")?, "alpha")?[0])?;
        let mode: MonitorMode = keyed(&next("mode")?, "mode")?[0].parse()?;
        let mix = next("mixture")?;
        let mixture = read_mixture(&mix, &mut next)?;
        let wl = keyed(&next("weights")?, "weights")?.to_vec();
        let weights = match wl.first().copied() {
            Some("uniform") => HypothesisWeights::Uniform,
            Some("custom") => HypothesisWeights::Custom(wl[1..].iter().map(|v| parse_f64(v)).collect::<Result<_>>()?),
            _ => return Err(Error::Parse("bad weights line".into())),
        };
        let config = MonitorConfig {
            alpha,
            mode,
            mixture,
            weights,
            procedure,
        };
        let mut monitor = Monitor::new(game, config)?;
        monitor.round = parse_u64(keyed(&next("round")?, "round")?[0])?;
        monitor.rejection.k = parse_u64(keyed(&next("k")?, "k")?[0])? as usize;
        monitor.rejection.stopped = parse_opt(keyed(&next("stopped")?, "stopped")?[0])?;
        monitor.rejection.first_alarm = parse_opt(keyed(&next("first_alarm")?, "first_alarm")?[0])?;
        let n_rej = parse_u64(keyed(&next("rejected")?, "rejected")?[0])? as usize;
        let mut rejected = Vec::with_capacity(n_rej);
        for _ in 0..n_rej {
            let r = keyed(&next("r")?, "r")?.to_vec();
            let idx = parse_u64(r.first().copied().unwrap_or(""))? as usize;
            let hypothesis = *monitor
                .hypotheses
                .get(idx)
                .ok_or_else(|| Error::Parse(format!("rejection index {idx} out of range")))?;
            rejected.push(Rejection {
                hypothesis,
                round: parse_u64(r.get(1).copied().unwrap_or(""))?,
            });
        }
        monitor.rejection.rejected = rejected;
        let m = parse_u64(keyed(&next("hypotheses")?, "hypotheses")?[0])? as usize;
        if m != monitor.hypotheses.len() {
            return Err(shape(format!(
                "snapshot has {m} hypotheses, game has {}",
                monitor.hypotheses.len()
            )));
        }
        for h in 0..m {
            let f = keyed(&next("h")?, "h")?.to_vec();
            if f.len() != 6 + monitor.mixture.len() {
                return Err(Error::Parse(format!("hypothesis line {h} has {} fields", f.len())));
            }
            let id = HypothesisId {
                player: parse_u64(f[0])? as usize,
                deviation: parse_u64(f[1])? as usize,
                condition: parse_opt(f[2])?.map(|c| c as usize),
            };
            if id != monitor.hypotheses[h] {
                return Err(Error::Parse(format!("hypothesis {h} is {id}, expected {}", monitor.hypotheses[h])));
            }
            let rounds = parse_u64(f[3])?;
            let log_max = parse_f64(f[4])?;
            monitor.crossing[h] = parse_opt(f[5])?;
            let mut log_wealth = Vec::with_capacity(monitor.mixture.len());
            let mut dead = Vec::with_capacity(monitor.mixture.len());
            for v in &f[6..] {
                if *v == "dead" {
                    log_wealth.push(f64::NEG_INFINITY);
                    dead.push(true);
                } else {
                    log_wealth.push(parse_f64(v)?);
                    dead.push(false);
                }
            }
            monitor.states[h] =
                EProcessState::from_parts(log_wealth, dead, rounds, log_max, None, None, &monitor.mixture)?;
        }
        Ok(monitor)
    }
}

fn write_mixture(s: &mut String, mixture: &BettingMixture) {
    match mixture.kind() {
        MixtureKind::Dirac => writeln!(s, "mixture dirac {:?}", mixture.lambdas()[0]).unwrap(),
        MixtureKind::Grid => {
            writeln!(s, "mixture grid {}", mixture.len()).unwrap();
            for (l, w) in mixture.lambdas().iter().zip(mixture.weights()) {
                writeln!(s, "node {l:?} {w:?}").unwrap();
            }
        }
    }
}

fn read_mixture<'a>(
    fields: &[&str],
    next: &mut impl FnMut(&str) -> Result<Vec<&'a str>>,
) -> Result<BettingMixture> {
    let f = keyed(fields, "mixture")?;
    match f.first().copied() {
        Some("dirac") => BettingMixture::dirac(parse_f64(f.get(1).copied().unwrap_or(""))?),
        Some("grid") => {
            let n = parse_u64(f.get(1).copied().unwrap_or(""))? as usize;
            let mut lambdas = Vec::with_capacity(n);
            let mut weights = Vec::with_capacity(n);
            for _ in 0..n {
                let node = next("node")?;
                let node = keyed(&node, "node")?;
                lambdas.push(parse_f64(node.first().copied().unwrap_or(""))?);
                weights.push(parse_f64(node.get(1).copied().unwrap_or(""))?);
            }
            BettingMixture::grid(lambdas, weights)
        }
        _ => Err(Error::Parse("bad mixture line".into())),
    }
}

fn keyed<'a, 'b>(fields: &'b [&'a str], key: &str) -> Result<&'b [&'a str]> {
    match fields.split_first() {
        Some((k, rest)) if *k == key && !rest.is_empty() => Ok(rest),
        _ => Err(Error::Parse(format!("expected `{key}` line, found `{}`", fields.join(" ")))),
    }
}

fn parse_f64(v: &str) -> Result<f64> {
    v.parse().map_err(|_| Error::Parse(format!("bad number `{v}`")))
}

fn parse_u64(v: &str) -> Result<u64> {
    v.parse().map_err(|_| Error::Parse(format!("bad integer `{v}`")))
}

fn parse_opt(v: &str) -> Result<Option<u64>> {
    if v == "-" {
        Ok(None)
    } else {
        parse_u64(v).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eprocess::slack_lower_bound;
    use crate::scenarios;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dirac(l: f64) -> BettingMixture {
        BettingMixture::dirac(l).unwrap()
    }

    #[test]
    fn hypothesis_counts() {
        let g = scenarios::weak_signal_game();
        assert_eq!(enumerate_hypotheses(&g, MonitorMode::Nash).len(), 4);
        assert_eq!(enumerate_hypotheses(&g, MonitorMode::CeConditional).len(), 4);
        let single = NormalFormGame::new(vec![1], vec![vec![0.3]]).unwrap();
        assert_eq!(enumerate_hypotheses(&single, MonitorMode::Nash).len(), 1);
        let g3 = NormalFormGame::new(vec![3, 2], vec![vec![0.0; 6]; 2]).unwrap();
        assert_eq!(enumerate_hypotheses(&g3, MonitorMode::CeConditional).len(), 3 * 2 + 2);
        assert!(enumerate_hypotheses(&g3, MonitorMode::CeConditional)
            .iter()
            .all(|h| h.condition != Some(h.deviation)));
    }

    #[test]
    fn thresholds_for_four_hypotheses() {
        assert_eq!(fwer_threshold(4, 0.2), 20.0);
        let g = scenarios::weak_signal_game();
        let m = Monitor::new(g, MonitorConfig::new(0.2, dirac(0.05), Procedure::Fdr)).unwrap();
        assert_eq!(m.threshold(), 20.0);
        assert_eq!(m.ebh_threshold(1, 0), 20.0);
        assert_eq!(m.ebh_threshold(2, 3), 10.0);
    }

    #[test]
    fn ebh_hand_examples() {
        let w = [0.25; 4];
        assert_eq!(ebh_rejection(&[21.0, 3.0, 3.0, 3.0], 0.2, &w).unwrap(), (1, vec![0]));
        assert_eq!(ebh_rejection(&[12.0, 11.0, 1.0, 1.0], 0.2, &w).unwrap(), (2, vec![0, 1]));
        assert_eq!(ebh_rejection(&[1.0; 4], 0.2, &w).unwrap(), (0, vec![]));
        assert!(ebh_rejection(&[1.0; 3], 0.2, &w).is_err());
    }

    #[test]
    fn ebh_single_weight_is_ville_test() {
        let w = [1.0, 0.0, 0.0];
        // Zero weights give infinite levels; only the first can be rejected, at 1/α.
        assert_eq!(ebh_rejection(&[19.9, 1e9, 1e9], 0.05, &w).unwrap().0, 0);
        assert_eq!(ebh_rejection(&[20.0, 1e9, 1e9], 0.05, &w).unwrap(), (1, vec![0]));
    }

    #[test]
    fn zero_increments_never_reject() {
        let g = NormalFormGame::new(vec![2, 2], vec![vec![0.5; 4]; 2]).unwrap();
        let mut m = Monitor::new(g, MonitorConfig::new(0.2, dirac(0.5), Procedure::Fwer)).unwrap();
        for _ in 0..2000 {
            assert_eq!(m.fwer_step(&ActionProfile(vec![1, 0])).unwrap(), FwerDecision::Continue);
        }
        assert!(m.states().iter().all(|s| s.mixture_value() == 1.0));
    }

    #[test]
    fn deterministic_slack_game_stops_exactly() {
        let scenario = scenarios::slack_game(0.05).unwrap();
        let cfg = MonitorConfig::new(0.2, dirac(0.05), Procedure::Fwer);
        let mut m = Monitor::new(scenario.game, cfg).unwrap();
        let a = ActionProfile(vec![0, 0]);
        let mut decision = FwerDecision::Continue;
        while decision == FwerDecision::Continue {
            decision = m.fwer_step(&a).unwrap();
        }
        let expected = slack_lower_bound(20.0, 0.05, 0.05).unwrap();
        assert_eq!(expected, 1200);
        match decision {
            FwerDecision::Reject { round, hypotheses } => {
                assert_eq!(round, expected);
                assert_eq!(
                    hypotheses,
                    vec![HypothesisId {
                        player: 0,
                        deviation: 1,
                        condition: None
                    }]
                );
            }
            FwerDecision::Continue => unreachable!(),
        }
        assert!(matches!(m.fwer_step(&a), Err(Error::State(_))));
    }

    #[test]
    fn wrong_procedure_is_state_error() {
        let g = scenarios::weak_signal_game();
        let mut m = Monitor::new(g.clone(), MonitorConfig::new(0.2, dirac(0.05), Procedure::Fwer)).unwrap();
        assert!(matches!(m.fdr_step(&ActionProfile(vec![0, 0])), Err(Error::State(_))));
        let mut m = Monitor::new(g, MonitorConfig::new(0.2, dirac(0.05), Procedure::Fdr)).unwrap();
        assert!(matches!(m.fwer_step(&ActionProfile(vec![0, 0])), Err(Error::State(_))));
    }

    #[test]
    fn null_stream_has_empty_rejection_set() {
        let g = NormalFormGame::new(vec![2, 2], vec![vec![0.5; 4]; 2]).unwrap();
        let mut m = Monitor::new(g, MonitorConfig::new(0.2, dirac(0.3), Procedure::Fdr)).unwrap();
        for t in 0..1000 {
            let st = m.fdr_step(&ActionProfile(vec![t % 2, (t / 2) % 2])).unwrap();
            assert!(st.rejected.is_empty());
            assert_eq!(st.k, 0);
        }
    }

    #[test]
    fn invalid_configs() {
        let g = scenarios::weak_signal_game();
        let bad_alpha = MonitorConfig::new(1.0, dirac(0.1), Procedure::Fwer);
        assert!(Monitor::new(g.clone(), bad_alpha).is_err());
        let bad_w = MonitorConfig::new(0.1, dirac(0.1), Procedure::Fdr)
            .with_weights(HypothesisWeights::Custom(vec![0.5, 0.5, 0.5, 0.5]));
        assert!(Monitor::new(g.clone(), bad_w).is_err());
        let short_w = MonitorConfig::new(0.1, dirac(0.1), Procedure::Fdr)
            .with_weights(HypothesisWeights::Custom(vec![0.5, 0.5]));
        assert!(Monitor::new(g, short_w).is_err());
    }

    #[test]
    fn eps_mode_caps_lambda() {
        let g = scenarios::weak_signal_game();
        let cfg = MonitorConfig::new(0.2, dirac(1.0), Procedure::Fwer).with_mode(MonitorMode::EpsApprox(0.25));
        let mut m = Monitor::new(g, cfg).unwrap();
        assert_eq!(m.mixture().lambdas(), &[0.8]);
        // Increment 1 + 0.25 kills wealth exactly rather than going negative.
        m.fwer_step(&ActionProfile(vec![0, 0])).unwrap();
        assert!(m.states().iter().all(|s| s.mixture_value() >= 0.0));
    }

    #[test]
    fn conditional_mode_updates_only_on_recommendation() {
        let g = scenarios::weak_signal_game();
        let cfg = MonitorConfig::new(0.2, dirac(0.1), Procedure::Fdr).with_mode(MonitorMode::CeConditional);
        let mut m = Monitor::new(g, cfg).unwrap();
        m.fdr_step(&ActionProfile(vec![0, 1])).unwrap();
        for (id, st) in m.hypotheses().iter().zip(m.states()) {
            let played = [0, 1][id.player];
            let expected = u64::from(id.condition == Some(played));
            assert_eq!(st.round(), expected, "{id}");
        }
    }

    #[test]
    fn snapshot_roundtrip_and_replay() {
        let g = scenarios::weak_signal_game();
        let strategy = scenarios::weak_signal_alternative();
        let cfg = MonitorConfig::new(0.2, BettingMixture::uniform_midpoints(11).unwrap(), Procedure::Fdr);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let stream: Vec<_> = (0..600).map(|_| strategy.sample(&mut rng)).collect();

        let mut straight = Monitor::new(g.clone(), cfg).unwrap();
        for a in &stream[..300] {
            straight.fdr_step(a).unwrap();
        }
        let snap = straight.snapshot();
        let mut resumed = Monitor::restore(g, &snap).unwrap();
        assert_eq!(resumed.snapshot(), snap);
        for a in &stream[300..] {
            straight.fdr_step(a).unwrap();
            resumed.fdr_step(a).unwrap();
        }
        assert_eq!(resumed.snapshot(), straight.snapshot());
        assert_eq!(resumed.rejection(), straight.rejection());
    }

    #[test]
    fn restore_rejects_garbage() {
        let g = scenarios::weak_signal_game();
        assert!(Monitor::restore(g.clone(), "not a snapshot").is_err());
        let m = Monitor::new(g.clone(), MonitorConfig::new(0.2, dirac(0.05), Procedure::Fwer)).unwrap();
        let snap = m.snapshot().replace("hypotheses 4", "hypotheses 5");
        assert!(Monitor::restore(g, &snap).is_err());
    }
}
