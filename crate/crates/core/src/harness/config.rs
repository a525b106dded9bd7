//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Lists are comma separated
//! and numbers may be written as fractions (`5/7`). Keys absent from a file
//! keep the experiment's built-in default.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::env::prey::PreyConfig;
use crate::eprocess::{BettingMixture, DEFAULT_MONITOR_NODES};
use crate::error::{domain, Error, Result};
use crate::monitor::{HypothesisWeights, MonitorMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    NfFwerNull,
    NfDetect,
    NfSensitivity,
    NfSlack,
    SoccerSolve,
    SoccerScaling,
    PreyMixture,
    KlCheck,
    OracleSuite,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 9] = [
        ExperimentId::NfFwerNull,
        ExperimentId::NfDetect,
        ExperimentId::NfSensitivity,
        ExperimentId::NfSlack,
        ExperimentId::SoccerSolve,
        ExperimentId::SoccerScaling,
        ExperimentId::PreyMixture,
        ExperimentId::KlCheck,
        ExperimentId::OracleSuite,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::NfFwerNull => "nf-fwer-null",
            ExperimentId::NfDetect => "nf-detect",
            ExperimentId::NfSensitivity => "nf-sensitivity",
            ExperimentId::NfSlack => "nf-slack",
            ExperimentId::SoccerSolve => "soccer-solve",
            ExperimentId::SoccerScaling => "soccer-scaling",
            ExperimentId::PreyMixture => "prey-mixture",
            ExperimentId::KlCheck => "kl-check",
            ExperimentId::OracleSuite => "oracle-suite",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownExperiment(s.trim().to_string()))
    }
}

/// How the λ-mixture of a normal-form monitor is built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixtureSpec {
    Dirac(f64),
    Uniform(usize),
}

impl MixtureSpec {
    pub fn build(&self) -> Result<BettingMixture> {
        match *self {
            MixtureSpec::Dirac(l) => BettingMixture::dirac(l),
            MixtureSpec::Uniform(g) => BettingMixture::uniform_midpoints(g),
        }
    }
}

impl fmt::Display for MixtureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixtureSpec::Dirac(l) => write!(f, "dirac:{l}"),
            MixtureSpec::Uniform(g) => write!(f, "uniform:{g}"),
        }
    }
}

impl FromStr for MixtureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(l) = s.strip_prefix("dirac:") {
            return Ok(MixtureSpec::Dirac(parse_number(l)?));
        }
        if s == "uniform" {
            return Ok(MixtureSpec::Uniform(DEFAULT_MONITOR_NODES));
        }
        if let Some(g) = s.strip_prefix("uniform:") {
            return g
                .trim()
                .parse()
                .map(MixtureSpec::Uniform)
                .map_err(|_| Error::Parse(format!("bad node count in `{s}`")));
        }
        Err(Error::Parse(format!("mixture must be `dirac:<λ>` or `uniform[:<nodes>]`, got `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub runs: usize,
    /// Rounds per run (normal-form) or stream steps (stochastic monitors).
    pub horizon: u64,
    pub alpha: f64,
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub etas: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Candidate deviation sizes averaged by the predator-prey monitor.
    pub mixture_grid: Vec<f64>,
    pub mixture: MixtureSpec,
    /// Also run the uniform λ-mixture in the sensitivity grid.
    pub include_uniform: bool,
    pub mode: MonitorMode,
    pub weights: HypothesisWeights,
    /// Level `b` for likelihood-ratio monitors.
    pub threshold: f64,
    pub smoothing: f64,
    /// Rollout length for the empirical state-visit distribution.
    pub visit_steps: u64,
    pub prey: PreyConfig,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Built-in defaults, matching the checked-in files under `configs/`.
    pub fn defaults(experiment: ExperimentId) -> Self {
        let base = Self {
            experiment,
            seed: 20240601,
            runs: 300,
            horizon: 4000,
            alpha: 0.2,
            alphas: vec![0.2, 0.1, 0.05],
            lambdas: vec![0.05],
            etas: vec![],
            epsilons: vec![],
            mixture_grid: vec![],
            mixture: MixtureSpec::Dirac(0.05),
            include_uniform: false,
            mode: MonitorMode::Nash,
            weights: HypothesisWeights::Uniform,
            threshold: 20.0,
            smoothing: 0.05,
            visit_steps: 20_000,
            prey: PreyConfig::default(),
            output: None,
        };
        match experiment {
            ExperimentId::NfFwerNull => Self {
                lambdas: vec![0.05, 0.1, 0.15, 0.4],
                ..base
            },
            ExperimentId::NfDetect => base,
            ExperimentId::NfSensitivity => Self {
                runs: 100,
                horizon: 20_000,
                lambdas: vec![0.05, 0.1, 0.15, 0.4],
                etas: vec![0.05, 0.1, 0.15],
                include_uniform: true,
                ..base
            },
            ExperimentId::NfSlack => Self { runs: 20, ..base },
            ExperimentId::SoccerSolve => Self { runs: 1, ..base },
            ExperimentId::SoccerScaling => Self {
                runs: 150,
                horizon: 1_000_000,
                epsilons: vec![0.05, 0.1, 0.2, 0.3, 0.5],
                ..base
            },
            ExperimentId::PreyMixture => Self {
                runs: 100,
                horizon: 5000,
                epsilons: vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.6, 0.8],
                mixture_grid: vec![0.1, 0.3, 0.5, 0.7, 0.9],
                ..base
            },
            ExperimentId::KlCheck => Self {
                runs: 50,
                epsilons: vec![1e-3, 1e-2, 0.1],
                ..base
            },
            ExperimentId::OracleSuite => Self { runs: 1000, ..base },
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, None)
    }

    /// Parses config text. `expected` pins the experiment id when the
    /// caller already knows it; a conflicting `experiment` key is an error.
    pub fn parse(text: &str, expected: Option<ExperimentId>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
            pairs.push((n + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let declared = pairs
            .iter()
            .find(|(_, k, _)| k == "experiment")
            .map(|(_, _, v)| v.parse::<ExperimentId>())
            .transpose()?;
        let experiment = match (declared, expected) {
            (Some(d), Some(e)) if d != e => {
                return Err(Error::Parse(format!("config is for `{d}`, not `{e}`")));
            }
            (Some(d), _) => d,
            (None, Some(e)) => e,
            (None, None) => return Err(Error::Parse("config lacks an `experiment` key".into())),
        };
        let mut cfg = Self::defaults(experiment);
        for (line, key, value) in pairs {
            cfg.set(&key, &value)
                .map_err(|e| Error::Parse(format!("line {line} (`{key}`): {e}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => {}
            "seed" => self.seed = parse_int(value)?,
            "runs" => self.runs = parse_int(value)?,
            "horizon" => self.horizon = parse_int(value)?,
            "alpha" => self.alpha = parse_number(value)?,
            "alphas" => self.alphas = parse_list(value)?,
            "lambdas" => self.lambdas = parse_list(value)?,
            "etas" => self.etas = parse_list(value)?,
            "epsilons" => self.epsilons = parse_list(value)?,
            "mixture_grid" => self.mixture_grid = parse_list(value)?,
            "mixture" => self.mixture = value.parse()?,
            "include_uniform" => self.include_uniform = parse_bool(value)?,
            "mode" => self.mode = value.parse()?,
            "weights" => {
                self.weights = if value == "uniform" {
                    HypothesisWeights::Uniform
                } else {
                    HypothesisWeights::Custom(parse_list(value)?)
                }
            }
            "threshold" => self.threshold = parse_number(value)?,
            "smoothing" => self.smoothing = parse_number(value)?,
            "visit_steps" => self.visit_steps = parse_int(value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            "prey_size" => self.prey.size = parse_int(value)?,
            "prey_episode_horizon" => self.prey.horizon = parse_int(value)?,
            "suspect_start" => self.prey.suspect_start = parse_cell(value)?,
            "prey_start" => self.prey.prey_start = parse_cell(value)?,
            "honest_starts" => {
                let cells: Vec<_> = value.split(';').map(parse_cell).collect::<Result<_>>()?;
                self.prey.honest_starts = cells
                    .try_into()
                    .map_err(|_| Error::Parse("need exactly two honest starts".into()))?;
            }
            other => return Err(Error::Parse(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 || self.horizon == 0 {
            return Err(domain("runs and horizon must be positive"));
        }
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.alpha) || !self.alphas.iter().all(|&a| in_unit(a)) {
            return Err(domain("significance levels must lie in (0, 1)"));
        }
        if !self.lambdas.iter().all(|&l| l > 0.0 && l <= 1.0) {
            return Err(domain("betting fractions must lie in (0, 1]"));
        }
        if !self.etas.iter().all(|&e| e > 0.0 && e <= 0.5) {
            return Err(domain("slacks must lie in (0, 0.5]"));
        }
        if !self.epsilons.iter().chain(&self.mixture_grid).all(|&e| e > 0.0 && e <= 1.0) {
            return Err(domain("deviation sizes must lie in (0, 1]"));
        }
        if !(self.threshold > 1.0) {
            return Err(domain("threshold must exceed 1"));
        }
        if !(0.0..1.0).contains(&self.smoothing) {
            return Err(domain("smoothing must lie in [0, 1)"));
        }
        self.mixture.build()?;
        self.prey.validate()
    }

    /// Flat text form that [`ExperimentConfig::parse`] reads back.
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let cell = |(r, c): (usize, usize)| format!("{r},{c}");
        let weights = match &self.weights {
            HypothesisWeights::Uniform => "uniform".to_string(),
            HypothesisWeights::Custom(w) => list(w),
        };
        let mut lines = vec![
            format!("experiment = {}", self.experiment),
            format!("seed = {}", self.seed),
            format!("runs = {}", self.runs),
            format!("horizon = {}", self.horizon),
            format!("alpha = {}", self.alpha),
            format!("alphas = {}", list(&self.alphas)),
            format!("lambdas = {}", list(&self.lambdas)),
            format!("etas = {}", list(&self.etas)),
            format!("epsilons = {}", list(&self.epsilons)),
            format!("mixture_grid = {}", list(&self.mixture_grid)),
            format!("mixture = {}", self.mixture),
            format!("include_uniform = {}", self.include_uniform),
            format!("mode = {}", self.mode),
            format!("weights = {weights}"),
            format!("threshold = {}", self.threshold),
            format!("smoothing = {}", self.smoothing),
            format!("visit_steps = {}", self.visit_steps),
            format!("prey_size = {}", self.prey.size),
            format!("prey_episode_horizon = {}", self.prey.horizon),
            format!("suspect_start = {}", cell(self.prey.suspect_start)),
            format!("prey_start = {}", cell(self.prey.prey_start)),
            format!(
                "honest_starts = {};{}",
                cell(self.prey.honest_starts[0]),
                cell(self.prey.honest_starts[1])
            ),
        ];
        if let Some(out) = &self.output {
            lines.push(format!("output = {}", out.display()));
        }
        lines.join("\n") + "\n"
    }
}

/// Decimal or `p/q` fraction.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| Error::Parse(format!("bad fraction `{s}`")))?;
            let q: f64 = q.trim().parse().map_err(|_| Error::Parse(format!("bad fraction `{s}`")))?;
            if q == 0.0 {
                return Err(Error::Parse(format!("zero denominator in `{s}`")));
            }
            p / q
        }
        None => s.parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse(format!("non-finite number `{s}`")))
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_number).collect()
}

fn parse_int<T: FromStr>(s: &str) -> Result<T> {
    s.trim().replace('_', "").parse().map_err(|_| Error::Parse(format!("bad integer `{s}`")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Parse(format!("bad boolean `{other}`"))),
    }
}

fn parse_cell(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("cell must be `row,col`, got `{s}`")))?;
    Ok((parse_int(r)?, parse_int(c)?))
}
