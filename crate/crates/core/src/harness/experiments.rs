//! The nine experiment protocols.
//!
//! Each experiment turns a config into per-run records; [`summarize`] then
//! folds the records, and nothing else, into the summary and figure data.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentId, MixtureSpec};
use super::records::{group_label, group_param, runs_csv, Figure, RunRecord, Summary};
use super::seed::{run_rng, stream_id};
use super::stats::{fit_loglog_slope, mean, std_error};
use crate::env::prey::{chase_policy, prey_step, PreyConfig, PreyState, DOWN, PREY_ACTIONS, PREY_ACTION_NAMES};
use crate::env::soccer::{
    afraid_policy, soccer_build_model, soccer_step, SoccerRules, SoccerState, SOCCER_ACTION_NAMES, SOCCER_STATES,
};
use crate::env::trace::{write_trace_csv, TraceRow};
use crate::eprocess::{
    detection_bound_uniform, exact_uniform_mixture, slack_lower_bound, BettingMixture, EProcessState, ORACLE_NODES,
};
use crate::error::{Error, Result};
use crate::game::{deviation_gain, equilibrium_slack, sample_index, ActionProfile, EquilibriumConcept, JointStrategy};
use crate::monitor::{FwerDecision, Monitor, MonitorConfig, Procedure};
use crate::scenarios::{
    matching_pennies, sensitivity_alternative, slack_game, weak_signal_alternative, weak_signal_game,
    weak_signal_nash,
};
use crate::stochastic::{
    exploitability, lr_detection_bound, lr_evalue, lr_step, matrix_game_solve, mixture_policy, overshoot_constant,
    shapley_solve, shapley_sweep, smooth_policy, state_avg_kl, kl_quadratic_check, LRMonitorState, Policy,
    SolverConfig,
};

/// Acceptance bounds applied by [`summarize`].
pub mod bounds {
    /// FWER in the (λ = 0.05, α = 0.2) cell must not exceed this rate.
    pub const NULL_CELL_FWER: f64 = 0.05;
    pub const SPEEDUP_MIN: f64 = 1.05;
    pub const SPEEDUP_MAX: f64 = 1.30;
    pub const SLOPE_MIN: f64 = -2.5;
    pub const SLOPE_MAX: f64 = -1.5;
    pub const MIN_SCALING_RUNS: usize = 30;
    pub const PREY_DETECTION_RATE: f64 = 0.95;
    /// Deviation sizes at or above this enter the predator-prey checks.
    pub const PREY_CHECK_FROM: f64 = 0.2;
    pub const PREY_FIRST_STEP: f64 = 1.587;
    pub const PREY_FIRST_STEP_TOL: f64 = 1e-3;
    pub const KL_CHECK_EPS: f64 = 1e-3;
    pub const KL_RATIO_TOL: f64 = 0.05;
    pub const SHAPLEY_MAX_ITER: usize = 100;
    pub const SHAPLEY_TOL: f64 = 1e-3;
    pub const QUADRATURE_REL_TOL: f64 = 1e-3;
    pub const EXPLOITABILITY_TOL: f64 = 1e-6;
    pub const PENNIES_TOL: f64 = 1e-9;
    pub const NASH_SLACK_TOL: f64 = 1e-12;
    pub const GAIN_TOL: f64 = 1e-12;
    pub const NORMALIZATION_TOL: f64 = 1e-12;
}

/// Streams fed to the quadrature cross-check in the oracle suite.
pub const QUADRATURE_STREAMS: usize = 100;
const QUADRATURE_MAX_LEN: usize = 20;
const TRACE_STEPS: usize = 12;
const SOCCER_TRACE_EPS: f64 = 0.5;
const PREY_TRACE_EPS: f64 = 0.6;

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
    pub summary: Summary,
    /// Extra artifacts as `(file name, contents)`.
    pub extras: Vec<(String, String)>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let (records, extras) = match config.experiment {
        ExperimentId::NfFwerNull => (nf_fwer_null(config)?, vec![]),
        ExperimentId::NfDetect => (nf_detect(config)?, vec![]),
        ExperimentId::NfSensitivity => (nf_sensitivity(config)?, vec![]),
        ExperimentId::NfSlack => (nf_slack(config)?, vec![]),
        ExperimentId::SoccerSolve => soccer_solve(config)?,
        ExperimentId::SoccerScaling => (soccer_scaling(config)?, vec![]),
        ExperimentId::PreyMixture => prey_mixture(config)?,
        ExperimentId::KlCheck => (kl_check(config)?, vec![]),
        ExperimentId::OracleSuite => (oracle_suite(config)?, vec![]),
    };
    let summary = summarize(config.experiment, &records)?;
    Ok(ExperimentOutput {
        config: config.clone(),
        records,
        summary,
        extras,
    })
}

/// Writes `runs.csv`, `summary.csv`, `config.txt`, every figure and extra.
pub fn write_artifacts(dir: &Path, output: &ExperimentOutput) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut files = vec![
        ("runs.csv".to_string(), runs_csv(&output.records)),
        ("summary.csv".to_string(), output.summary.to_csv()),
        ("config.txt".to_string(), output.config.to_text()),
    ];
    for fig in &output.summary.figures {
        files.push((format!("figure_{}.dat", fig.name), fig.to_dat()));
    }
    files.extend(output.extras.iter().cloned());
    let mut written = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Runs `f(group, run)` for every cell in parallel; results stay in
/// `(group, run)` order.
fn par_runs<T: Send>(groups: usize, runs: usize, f: impl Fn(usize, usize) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..groups * runs)
        .into_par_iter()
        .map(|i| f(i / runs, i % runs))
        .collect()
}

fn record(config: &ExperimentConfig, group: String, g: usize, run: usize) -> RunRecord {
    RunRecord::new(group, run, config.seed, stream_id(g, run))
}

fn nf_monitor(config: &ExperimentConfig, alpha: f64, mixture: BettingMixture, procedure: Procedure) -> Result<Monitor> {
    let cfg = MonitorConfig::new(alpha, mixture, procedure)
        .with_mode(config.mode)
        .with_weights(config.weights.clone());
    Monitor::new(weak_signal_game(), cfg)
}

fn max_running(monitor: &Monitor) -> f64 {
    monitor
        .states()
        .iter()
        .map(EProcessState::running_max)
        .fold(0.0, f64::max)
}

/// Plays `strategy` into an FWER monitor until it stops or the horizon ends.
fn run_fwer(
    mut monitor: Monitor,
    strategy: &JointStrategy,
    horizon: u64,
    rng: &mut ChaCha8Rng,
    rec: &mut RunRecord,
) -> Result<()> {
    for _ in 0..horizon {
        let profile = strategy.sample(rng);
        if let FwerDecision::Reject { round, hypotheses } = monitor.fwer_step(&profile)? {
            rec.tau_fwer = Some(round);
            rec.rejected = hypotheses.iter().map(ToString::to_string).collect();
            break;
        }
    }
    rec.final_value = max_running(&monitor);
    rec.metric = monitor.threshold();
    Ok(())
}

fn nf_fwer_null(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let cells: Vec<(f64, f64)> = config
        .lambdas
        .iter()
        .flat_map(|&l| config.alphas.iter().map(move |&a| (l, a)))
        .collect();
    let nash = weak_signal_nash();
    par_runs(cells.len(), config.runs, |g, run| {
        let (lambda, alpha) = cells[g];
        let mut rec = record(config, group_label(&[("lambda", lambda), ("alpha", alpha)]), g, run);
        let monitor = nf_monitor(config, alpha, BettingMixture::dirac(lambda)?, Procedure::Fwer)?;
        let mut rng = run_rng(config.seed, g, run);
        run_fwer(monitor, &nash, config.horizon, &mut rng, &mut rec)?;
        Ok(rec)
    })
}

/// FWER and e-BH monitors watching the same stream of play.
fn nf_detect(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let alt = weak_signal_alternative();
    let mixture = config.mixture.build()?;
    let label = match config.mixture {
        MixtureSpec::Dirac(l) => group_label(&[("lambda", l), ("alpha", config.alpha)]),
        MixtureSpec::Uniform(n) => group_label(&[("uniform", n as f64), ("alpha", config.alpha)]),
    };
    par_runs(1, config.runs, |g, run| {
        let mut rec = record(config, label.clone(), g, run);
        let mut fwer = nf_monitor(config, config.alpha, mixture.clone(), Procedure::Fwer)?;
        let mut fdr = nf_monitor(config, config.alpha, mixture.clone(), Procedure::Fdr)?;
        let mut rng = run_rng(config.seed, g, run);
        for _ in 0..config.horizon {
            let profile = alt.sample(&mut rng);
            if rec.tau_fwer.is_none() {
                if let FwerDecision::Reject { round, .. } = fwer.fwer_step(&profile)? {
                    rec.tau_fwer = Some(round);
                }
            }
            if rec.tau_fdr.is_none() {
                let state = fdr.fdr_step(&profile)?;
                if let Some(t) = state.first_alarm {
                    rec.tau_fdr = Some(t);
                    rec.rejected = state.rejected.iter().map(|r| r.hypothesis.to_string()).collect();
                    rec.metric = state.k as f64;
                }
            }
            if rec.tau_fwer.is_some() && rec.tau_fdr.is_some() {
                break;
            }
        }
        rec.final_value = max_running(&fwer);
        Ok(rec)
    })
}

fn nf_sensitivity(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let mut mixtures: Vec<MixtureSpec> = config.lambdas.iter().map(|&l| MixtureSpec::Dirac(l)).collect();
    if config.include_uniform {
        mixtures.push(MixtureSpec::Uniform(crate::eprocess::DEFAULT_MONITOR_NODES));
    }
    let mut cells = Vec::new();
    for &eta in &config.etas {
        for &mix in &mixtures {
            for &alpha in &config.alphas {
                cells.push((eta, mix, alpha));
            }
        }
    }
    par_runs(cells.len(), config.runs, |g, run| {
        let (eta, mix, alpha) = cells[g];
        let label = match mix {
            MixtureSpec::Dirac(l) => group_label(&[("eta", eta), ("lambda", l), ("alpha", alpha)]),
            MixtureSpec::Uniform(n) => group_label(&[("eta", eta), ("uniform", n as f64), ("alpha", alpha)]),
        };
        let mut rec = record(config, label, g, run);
        let strategy = sensitivity_alternative(eta)?;
        let monitor = nf_monitor(config, alpha, mix.build()?, Procedure::Fwer)?;
        let b = monitor.threshold();
        let mut rng = run_rng(config.seed, g, run);
        run_fwer(monitor, &strategy, config.horizon, &mut rng, &mut rec)?;
        rec.metric = match mix {
            MixtureSpec::Uniform(_) => detection_bound_uniform(b, eta)?,
            MixtureSpec::Dirac(_) => f64::NAN,
        };
        Ok(rec)
    })
}

/// Random `(b, λ, η)` triples on dyadic grids, so that the game's payoffs
/// and the threshold are exact in floating point.
fn slack_triple(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let alpha = rng.random_range(1..=255) as f64 / 256.0;
    let lambda = rng.random_range(10..1000) as f64 / 1000.0;
    let eta = rng.random_range(1..=256) as f64 / 1024.0;
    (alpha, lambda, eta)
}

fn nf_slack(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    par_runs(1, config.runs, |g, run| {
        let mut rng = run_rng(config.seed, g, run);
        let (alpha, lambda, eta) = slack_triple(&mut rng);
        let scenario = slack_game(eta)?;
        let cfg = MonitorConfig::new(alpha, BettingMixture::dirac(lambda)?, Procedure::Fwer);
        let mut monitor = Monitor::new(scenario.game, cfg)?;
        let b = monitor.threshold();
        let expected = slack_lower_bound(b, lambda, eta)?;
        let mut rec = record(
            config,
            group_label(&[("b", b), ("lambda", lambda), ("eta", eta)]),
            g,
            run,
        );
        let profile = ActionProfile(vec![0, 0]);
        for _ in 0..expected + 10 {
            if let FwerDecision::Reject { round, hypotheses } = monitor.fwer_step(&profile)? {
                rec.tau_fwer = Some(round);
                rec.rejected = hypotheses.iter().map(ToString::to_string).collect();
                break;
            }
        }
        rec.final_value = max_running(&monitor);
        rec.metric = expected as f64;
        Ok(rec)
    })
}

struct SoccerSetup {
    rules: SoccerRules,
    null_a: Policy,
    null_b: Policy,
    afraid: Policy,
}

fn soccer_setup(config: &ExperimentConfig) -> Result<(SoccerSetup, crate::stochastic::ShapleySolution)> {
    let rules = SoccerRules::default();
    let model = soccer_build_model(&rules)?;
    let solver = SolverConfig {
        smoothing: config.smoothing,
        ..SolverConfig::default()
    };
    let sol = shapley_solve(&model, &solver)?;
    let null_a = smooth_policy(&sol.policies[0], config.smoothing)?;
    let null_b = smooth_policy(&sol.policies[1], config.smoothing)?;
    let afraid = afraid_policy(&null_a)?;
    Ok((
        SoccerSetup {
            rules,
            null_a,
            null_b,
            afraid,
        },
        sol,
    ))
}

/// Attacker plays `alt`, the defender its smoothed equilibrium policy;
/// episodes restart from kickoff. Returns the crossing step, if any.
fn soccer_stream(
    setup: &SoccerSetup,
    alt: &Policy,
    threshold: f64,
    horizon: u64,
    rng: &mut ChaCha8Rng,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<LRMonitorState> {
    let mut monitor = LRMonitorState::uniform(vec![alt.clone()])?;
    let mut state = SoccerState::default();
    while monitor.crossing_time().is_none() && monitor.round() < horizon {
        let s = state.index();
        let a = sample_index(alt.row(s), rng);
        let b = sample_index(setup.null_b.row(s), rng);
        let before = monitor.mixture_value();
        lr_step(&mut monitor, s, a, &setup.null_a, threshold)?;
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(TraceRow {
                step: monitor.round() - 1,
                positions: vec![state.attacker, state.defender],
                actions: vec![SOCCER_ACTION_NAMES[a].into(), SOCCER_ACTION_NAMES[b].into()],
                probabilities: setup.null_a.row(s).to_vec(),
                evalue: monitor.mixture_value() / before,
                martingale: monitor.mixture_value(),
            });
        }
        let out = soccer_step(&state, a, b, &setup.rules, rng)?;
        state = if out.terminal { SoccerState::default() } else { out.next };
    }
    Ok(monitor)
}

/// Empirical state-visit distribution of the attacker playing `alt`.
fn soccer_visits(setup: &SoccerSetup, alt: &Policy, steps: u64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let mut counts = vec![0u64; SOCCER_STATES];
    let mut state = SoccerState::default();
    for _ in 0..steps {
        let s = state.index();
        counts[s] += 1;
        let a = sample_index(alt.row(s), rng);
        let b = sample_index(setup.null_b.row(s), rng);
        let out = soccer_step(&state, a, b, &setup.rules, rng)?;
        state = if out.terminal { SoccerState::default() } else { out.next };
    }
    Ok(counts.iter().map(|&c| c as f64 / steps as f64).collect())
}

fn soccer_solve(config: &ExperimentConfig) -> Result<(Vec<RunRecord>, Vec<(String, String)>)> {
    let (setup, sol) = soccer_setup(config)?;
    let model = soccer_build_model(&setup.rules)?;
    let resolved = shapley_sweep(&model, &sol.values, SolverConfig::default().discount)?;
    let mut solver = record(config, "solver".into(), 0, 0);
    solver.tau_fwer = sol.converged.then_some(sol.iterations as u64);
    solver.final_value = sol.last_change;
    solver.metric = sol.iterations as f64;
    let mut records = vec![solver];
    for (s, (v, r)) in sol.values.iter().zip(&resolved).enumerate() {
        let mut rec = record(config, "state".into(), 1, s);
        rec.final_value = *v;
        rec.metric = (r.value - v).abs();
        records.push(rec);
    }
    let alt = mixture_policy(&setup.null_a, &setup.afraid, SOCCER_TRACE_EPS)?;
    let mut rows = Vec::new();
    let mut rng = run_rng(config.seed, 2, 0);
    soccer_stream(&setup, &alt, config.threshold, config.horizon, &mut rng, Some(&mut rows))?;
    let mut trace = Vec::new();
    write_trace_csv(&mut trace, &["A", "B"], &SOCCER_ACTION_NAMES, &rows)?;
    let extras = vec![
        ("policy_attacker.txt".into(), setup.null_a.to_text()),
        ("policy_defender.txt".into(), setup.null_b.to_text()),
        ("trace_soccer.csv".into(), String::from_utf8(trace).map_err(|e| Error::Parse(e.to_string()))?),
    ];
    Ok((records, extras))
}

fn soccer_scaling(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let (setup, _) = soccer_setup(config)?;
    let eps = &config.epsilons;
    let alts: Vec<Policy> = eps
        .iter()
        .map(|&e| mixture_policy(&setup.null_a, &setup.afraid, e))
        .collect::<Result<_>>()?;
    let mut records = par_runs(eps.len(), config.runs, |g, run| {
        let mut rec = record(config, group_label(&[("eps", eps[g])]), g, run);
        let mut rng = run_rng(config.seed, g, run);
        let monitor = soccer_stream(&setup, &alts[g], config.threshold, config.horizon, &mut rng, None)?;
        rec.tau_fwer = monitor.crossing_time();
        rec.final_value = monitor.running_max();
        Ok(rec)
    })?;
    let diagnostics = par_runs(eps.len(), 1, |g, _| {
        let k = eps.len() + g;
        let mut rng = run_rng(config.seed, k, 0);
        let mu = soccer_visits(&setup, &alts[g], config.visit_steps, &mut rng)?;
        let kl = state_avg_kl(&setup.null_a, &alts[g], &mu)?;
        let c = overshoot_constant(&setup.null_a, &alts[g])?;
        let mut rec = record(config, group_label(&[("kl", eps[g])]), k, 0);
        rec.metric = kl;
        rec.final_value = lr_detection_bound(config.threshold, c, kl, 1.0)?;
        Ok(rec)
    })?;
    records.extend(diagnostics);
    Ok(records)
}

fn prey_policies(prey: &PreyConfig, grid: &[f64]) -> Result<(Policy, Policy, Vec<Policy>)> {
    let n = prey.size;
    let mut chase = Vec::with_capacity(n.pow(4));
    for s in 0..n * n {
        for q in 0..n * n {
            let (pred, pos) = ((s / n, s % n), (q / n, q % n));
            chase.push(if pred == pos {
                vec![1.0 / PREY_ACTIONS as f64; PREY_ACTIONS]
            } else {
                chase_policy(pred, pos, n)?.to_vec()
            });
        }
    }
    let chase = Policy::new(chase)?;
    let null = Policy::uniform(n.pow(4), PREY_ACTIONS)?;
    let alts = grid
        .iter()
        .map(|&e| mixture_policy(&null, &chase, e))
        .collect::<Result<_>>()?;
    Ok((null, chase, alts))
}

/// Suspect plays `truth` against the mixture monitor; episodes restart on
/// capture or exhaustion.
#[allow(clippy::too_many_arguments)]
fn prey_stream(
    prey: &PreyConfig,
    null: &Policy,
    alts: &[Policy],
    truth: &Policy,
    threshold: f64,
    horizon: u64,
    rng: &mut ChaCha8Rng,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<LRMonitorState> {
    let mut monitor = LRMonitorState::uniform(alts.to_vec())?;
    let mut state: PreyState = prey.initial_state();
    while monitor.crossing_time().is_none() && monitor.round() < horizon {
        let s = prey.pair_index(&state);
        let a = sample_index(truth.row(s), rng);
        let before = monitor.mixture_value();
        lr_step(&mut monitor, s, a, null, threshold)?;
        let out = prey_step(&state, a, prey, rng)?;
        if let Some(rows) = trace.as_deref_mut() {
            let mut positions = vec![state.suspect];
            positions.extend(state.honest);
            positions.push(state.prey);
            rows.push(TraceRow {
                step: monitor.round() - 1,
                positions,
                actions: vec![PREY_ACTION_NAMES[a].into()],
                probabilities: truth.row(s).to_vec(),
                evalue: monitor.mixture_value() / before,
                martingale: monitor.mixture_value(),
            });
        }
        state = if out.terminal { prey.initial_state() } else { out.next };
    }
    Ok(monitor)
}

fn prey_mixture(config: &ExperimentConfig) -> Result<(Vec<RunRecord>, Vec<(String, String)>)> {
    let prey = &config.prey;
    let (null, chase, alts) = prey_policies(prey, &config.mixture_grid)?;
    let eps = &config.epsilons;
    let truths: Vec<Policy> = eps
        .iter()
        .map(|&e| mixture_policy(&null, &chase, e))
        .collect::<Result<_>>()?;
    let mut records = par_runs(eps.len(), config.runs, |g, run| {
        let mut rec = record(config, group_label(&[("eps", eps[g])]), g, run);
        let mut rng = run_rng(config.seed, g, run);
        let m = prey_stream(prey, &null, &alts, &truths[g], config.threshold, config.horizon, &mut rng, None)?;
        rec.tau_fwer = m.crossing_time();
        rec.final_value = m.running_max();
        Ok(rec)
    })?;

    // Deterministic first step of the sample trajectory: the suspect leaves
    // its corner downwards.
    let mut first = LRMonitorState::uniform(alts.clone())?;
    let s0 = prey.pair_index(&prey.initial_state());
    lr_step(&mut first, s0, DOWN, &null, config.threshold)?;
    let mut rec = record(config, "first-step".into(), eps.len(), 0);
    rec.metric = first.mixture_value();
    rec.final_value = first.running_max();
    records.push(rec);

    let truth = mixture_policy(&null, &chase, PREY_TRACE_EPS)?;
    let mut rows = Vec::new();
    let mut rng = run_rng(config.seed, eps.len() + 1, 0);
    prey_stream(prey, &null, &alts, &truth, config.threshold, TRACE_STEPS as u64, &mut rng, Some(&mut rows))?;
    let mut trace = Vec::new();
    write_trace_csv(&mut trace, &["suspect", "honest1", "honest2", "prey"], &PREY_ACTION_NAMES, &rows)?;
    let trace = String::from_utf8(trace).map_err(|e| Error::Parse(e.to_string()))?;
    Ok((records, vec![("trace_prey.csv".into(), trace)]))
}

/// Random full-support distribution with entries drawn uniformly from
/// `[0.05, 1]` before normalizing.
fn random_distribution(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn kl_check(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let per_pair = par_runs(1, config.runs, |g, run| {
        let mut rng = run_rng(config.seed, g, run);
        let p = random_distribution(PREY_ACTIONS, &mut rng);
        let q = random_distribution(PREY_ACTIONS, &mut rng);
        let rows = kl_quadratic_check(&p, &q, &config.epsilons)?;
        Ok(rows
            .into_iter()
            .map(|row| {
                let mut rec = record(config, group_label(&[("eps", row.epsilon)]), g, run);
                rec.final_value = row.kl;
                rec.metric = row.ratio();
                rec
            })
            .collect::<Vec<_>>())
    })?;
    // Group by ε so each parameter cell is contiguous.
    let mut records: Vec<RunRecord> = per_pair.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        let key = |r: &RunRecord| r.param("eps").unwrap_or(f64::NAN);
        key(a).total_cmp(&key(b)).then(a.run.cmp(&b.run))
    });
    Ok(records)
}

fn oracle_suite(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();

    let oracle_mixture = BettingMixture::uniform_midpoints(ORACLE_NODES)?;
    records.extend(par_runs(1, QUADRATURE_STREAMS, |g, run| {
        let mut rng = run_rng(config.seed, g, run);
        let len = rng.random_range(1..=QUADRATURE_MAX_LEN);
        let xs: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut state = EProcessState::new(&oracle_mixture);
        for &x in &xs {
            state.update(x, &oracle_mixture)?;
        }
        let exact = exact_uniform_mixture(&xs)?;
        let mut rec = record(config, "quadrature".into(), g, run);
        rec.final_value = state.mixture_value();
        rec.metric = ((state.mixture_value() - exact) / exact).abs();
        Ok(rec)
    })?);

    records.extend(par_runs(1, config.runs, |_, run| {
        let g = 1;
        let mut rng = run_rng(config.seed, g, run);
        let payoff: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..5).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        let sol = matrix_game_solve(&payoff)?;
        let mut rec = record(config, "matrix-game".into(), g, run);
        rec.final_value = sol.value;
        rec.metric = exploitability(&payoff, &sol);
        Ok(rec)
    })?);

    let pennies = matching_pennies();
    let zero_sum: Vec<Vec<f64>> = (0..2)
        .map(|a| (0..2).map(|b| 2.0 * pennies.payoff(0, &ActionProfile(vec![a, b])) - 1.0).collect())
        .collect();
    let sol = matrix_game_solve(&zero_sum)?;
    let mut rec = record(config, "pennies".into(), 2, 0);
    rec.final_value = sol.value;
    rec.metric = sol.value.abs();
    records.push(rec);

    let probe = Monitor::new(
        weak_signal_game(),
        MonitorConfig::new(0.2, BettingMixture::dirac(0.05)?, Procedure::Fdr),
    )?;
    for k in 1..=probe.hypotheses().len() {
        let mut rec = record(config, "ebh-level".into(), 3, k);
        rec.final_value = probe.ebh_threshold(k, 0);
        rec.metric = (probe.ebh_threshold(k, 0) - 4.0 / (k as f64 * 0.2)).abs();
        records.push(rec);
    }

    let game = weak_signal_game();
    let mut rec = record(config, "nash-slack".into(), 4, 0);
    rec.final_value = equilibrium_slack(&game, &weak_signal_nash(), EquilibriumConcept::Nash)?;
    rec.metric = rec.final_value.abs();
    records.push(rec);
    let alt = weak_signal_alternative();
    for (player, expected) in [(0usize, 0.03225), (1, 0.03325)] {
        let gain = deviation_gain(&game, &alt, player, 0)?;
        let mut rec = record(config, group_label(&[("gain-player", player as f64)]), 4, player + 1);
        rec.final_value = gain;
        rec.metric = (gain - expected).abs();
        records.push(rec);
    }

    records.extend(par_runs(1, QUADRATURE_STREAMS, |_, run| {
        let g = 5;
        let mut rng = run_rng(config.seed, g, run);
        let null = Policy::new(vec![random_distribution(PREY_ACTIONS, &mut rng)])?;
        let alt = Policy::new(vec![random_distribution(PREY_ACTIONS, &mut rng)])?;
        let total: f64 = (0..PREY_ACTIONS)
            .map(|a| Ok(null.prob(0, a) * lr_evalue(&null, &alt, 0, a)?))
            .sum::<Result<f64>>()?;
        let mut rec = record(config, "lr-normalization".into(), g, run);
        rec.final_value = total;
        rec.metric = (total - 1.0).abs();
        Ok(rec)
    })?);
    Ok(records)
}

fn groups_in_order(records: &[RunRecord]) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for r in records {
        if !seen.contains(&r.group) {
            seen.push(r.group.clone());
        }
    }
    seen
}

fn in_group<'a>(records: &'a [RunRecord], group: &'a str) -> impl Iterator<Item = &'a RunRecord> + 'a {
    records.iter().filter(move |r| r.group == group)
}

fn taus(records: &[RunRecord], group: &str) -> (Vec<f64>, usize) {
    let mut seen = Vec::new();
    let mut censored = 0;
    for r in in_group(records, group) {
        match r.tau_fwer {
            Some(t) => seen.push(t as f64),
            None => censored += 1,
        }
    }
    (seen, censored)
}

fn max_metric(records: &[RunRecord], group: &str) -> f64 {
    in_group(records, group).map(|r| r.metric).fold(0.0, f64::max)
}

/// Folds per-run records into the summary. Depends on nothing but the
/// records, so it can be recomputed from a parsed `runs.csv`.
pub fn summarize(experiment: ExperimentId, records: &[RunRecord]) -> Result<Summary> {
    let mut s = Summary::default();
    match experiment {
        ExperimentId::NfFwerNull => summarize_fwer_null(records, &mut s),
        ExperimentId::NfDetect => summarize_detect(records, &mut s),
        ExperimentId::NfSensitivity => summarize_sensitivity(records, &mut s),
        ExperimentId::NfSlack => summarize_slack(records, &mut s),
        ExperimentId::SoccerSolve => summarize_soccer_solve(records, &mut s),
        ExperimentId::SoccerScaling => summarize_soccer_scaling(records, &mut s)?,
        ExperimentId::PreyMixture => summarize_prey(records, &mut s)?,
        ExperimentId::KlCheck => summarize_kl(records, &mut s),
        ExperimentId::OracleSuite => summarize_oracles(records, &mut s),
    }
    Ok(s)
}

fn summarize_fwer_null(records: &[RunRecord], s: &mut Summary) {
    let mut fig = Figure {
        name: "fwer_null".into(),
        columns: vec!["lambda".into(), "alpha".into(), "b".into(), "fwer".into()],
        rows: vec![],
    };
    for g in groups_in_order(records) {
        let runs: Vec<_> = in_group(records, &g).collect();
        let rate = runs.iter().filter(|r| r.tau_fwer.is_some()).count() as f64 / runs.len() as f64;
        let (lambda, alpha) = (group_param(&g, "lambda"), group_param(&g, "alpha"));
        let b = runs[0].metric;
        s.stat(&g, "runs", runs.len() as f64);
        s.stat(&g, "b", b);
        s.stat(&g, "fwer", rate);
        if let (Some(lambda), Some(alpha)) = (lambda, alpha) {
            s.check(format!("fwer<=alpha[{g}]"), rate <= alpha, format!("{rate:.3} vs {alpha}"));
            if lambda == 0.05 && alpha == 0.2 {
                s.check(
                    "null-cell",
                    rate <= bounds::NULL_CELL_FWER,
                    format!("{rate:.3} vs {}", bounds::NULL_CELL_FWER),
                );
            }
            fig.rows.push(vec![lambda, alpha, b, rate]);
        }
    }
    s.figures.push(fig);
}

fn summarize_detect(records: &[RunRecord], s: &mut Summary) {
    let n = records.len();
    let dominated = records
        .iter()
        .filter(|r| match (r.tau_fdr, r.tau_fwer) {
            (Some(fdr), Some(fwer)) => fdr <= fwer,
            (_, None) => true,
            (None, Some(_)) => false,
        })
        .count();
    let both: Vec<_> = records
        .iter()
        .filter_map(|r| Some((r.tau_fwer? as f64, r.tau_fdr? as f64)))
        .collect();
    let fwer: Vec<f64> = both.iter().map(|p| p.0).collect();
    let fdr: Vec<f64> = both.iter().map(|p| p.1).collect();
    let speedup = mean(&fwer) / mean(&fdr);
    s.stat("all", "runs", n as f64);
    s.stat("all", "dominated", dominated as f64);
    s.stat("all", "detected_both", both.len() as f64);
    s.stat("all", "mean_tau_fwer", mean(&fwer));
    s.stat("all", "mean_tau_fdr", mean(&fdr));
    s.stat("all", "speedup", speedup);
    s.check("fdr-dominates-fwer", dominated == n, format!("{dominated}/{n}"));
    s.check(
        "fdr-speedup",
        both.len() == n && (bounds::SPEEDUP_MIN..=bounds::SPEEDUP_MAX).contains(&speedup),
        format!("{speedup:.4} over {}/{n} detected runs", both.len()),
    );
    s.figures.push(Figure {
        name: "detect_scatter".into(),
        columns: vec!["run".into(), "tau_fwer".into(), "tau_fdr".into()],
        rows: records
            .iter()
            .map(|r| {
                let t = |x: Option<u64>| x.map_or(f64::NAN, |t| t as f64);
                vec![r.run as f64, t(r.tau_fwer), t(r.tau_fdr)]
            })
            .collect(),
    });
}

fn summarize_sensitivity(records: &[RunRecord], s: &mut Summary) {
    let mut fig = Figure {
        name: "sensitivity".into(),
        columns: vec![
            "eta".into(),
            "lambda".into(),
            "alpha".into(),
            "mean_tau".into(),
            "censored".into(),
        ],
        rows: vec![],
    };
    for g in groups_in_order(records) {
        let (seen, censored) = taus(records, &g);
        let m = mean(&seen);
        s.stat(&g, "mean_tau", m);
        s.stat(&g, "censored", censored as f64);
        let eta = group_param(&g, "eta").unwrap_or(f64::NAN);
        let alpha = group_param(&g, "alpha").unwrap_or(f64::NAN);
        // λ = 0 marks the uniform mixture in the figure.
        let lambda = group_param(&g, "lambda").unwrap_or(0.0);
        if group_param(&g, "uniform").is_some() {
            let bound = in_group(records, &g).next().map_or(f64::NAN, |r| r.metric);
            s.stat(&g, "bound", bound);
            s.check(
                format!("uniform-ceiling[{g}]"),
                censored == 0 && m <= bound,
                format!("{m:.1} vs {bound:.1}, {censored} censored"),
            );
        }
        fig.rows.push(vec![eta, lambda, alpha, m, censored as f64]);
    }
    s.figures.push(fig);
}

fn summarize_slack(records: &[RunRecord], s: &mut Summary) {
    let exact = records
        .iter()
        .filter(|r| r.tau_fwer.is_some_and(|t| t as f64 == r.metric))
        .count();
    s.stat("all", "runs", records.len() as f64);
    s.stat("all", "exact", exact as f64);
    s.check(
        "slack-stop-exact",
        exact == records.len() && !records.is_empty(),
        format!("{exact}/{}", records.len()),
    );
    s.figures.push(Figure {
        name: "slack".into(),
        columns: vec!["b".into(), "lambda".into(), "eta".into(), "tau".into(), "expected".into()],
        rows: records
            .iter()
            .map(|r| {
                let p = |k| r.param(k).unwrap_or(f64::NAN);
                vec![p("b"), p("lambda"), p("eta"), r.tau_fwer.map_or(f64::NAN, |t| t as f64), r.metric]
            })
            .collect(),
    });
}

fn summarize_soccer_solve(records: &[RunRecord], s: &mut Summary) {
    let solver = in_group(records, "solver").next();
    let iterations = solver.map_or(f64::NAN, |r| r.metric);
    let converged = solver.is_some_and(|r| r.tau_fwer.is_some());
    let resolve = max_metric(records, "state");
    s.stat("solver", "iterations", iterations);
    s.stat("solver", "converged", f64::from(u8::from(converged)));
    s.stat("solver", "last_change", solver.map_or(f64::NAN, |r| r.final_value));
    s.stat("state", "max_resolve_change", resolve);
    s.check(
        "shapley-converged",
        converged && iterations <= bounds::SHAPLEY_MAX_ITER as f64,
        format!("converged={converged} after {iterations} sweeps"),
    );
    s.check(
        "shapley-fixed-point",
        resolve < bounds::SHAPLEY_TOL,
        format!("{resolve:.2e}"),
    );
    s.figures.push(Figure {
        name: "soccer_values".into(),
        columns: vec!["state".into(), "value".into()],
        rows: in_group(records, "state").map(|r| vec![r.run as f64, r.final_value]).collect(),
    });
}

fn summarize_soccer_scaling(records: &[RunRecord], s: &mut Summary) -> Result<()> {
    let mut points = Vec::new();
    let mut fig = Figure {
        name: "soccer_scaling".into(),
        columns: vec![
            "eps".into(),
            "mean_tau".into(),
            "std_error".into(),
            "kl_bar".into(),
            "bound".into(),
            "theory".into(),
        ],
        rows: vec![],
    };
    let mut complete = true;
    for g in groups_in_order(records) {
        let Some(eps) = group_param(&g, "eps") else { continue };
        let (seen, censored) = taus(records, &g);
        let m = mean(&seen);
        s.stat(&g, "runs", (seen.len() + censored) as f64);
        s.stat(&g, "mean_tau", m);
        s.stat(&g, "std_error", std_error(&seen));
        s.stat(&g, "censored", censored as f64);
        complete &= censored == 0 && seen.len() >= bounds::MIN_SCALING_RUNS;
        let kl_group = format!("kl={eps}");
        let diag = in_group(records, &kl_group).next();
        let (kl, bound) = diag.map_or((f64::NAN, f64::NAN), |r| (r.metric, r.final_value));
        s.stat(&g, "kl_bar", kl);
        s.stat(&g, "bound", bound);
        points.push((eps, m));
        fig.rows.push(vec![eps, m, std_error(&seen), kl, bound, f64::NAN]);
    }
    // Reference 1/ε² curve anchored at the largest ε.
    if let Some(&(e_max, t_max)) = points.iter().max_by(|a, b| a.0.total_cmp(&b.0)) {
        for row in &mut fig.rows {
            row[5] = t_max * (e_max / row[0]).powi(2);
        }
    }
    let (slope, intercept) = fit_loglog_slope(&points)?;
    s.stat("fit", "slope", slope);
    s.stat("fit", "intercept", intercept);
    s.check(
        "soccer-slope",
        complete && (bounds::SLOPE_MIN..=bounds::SLOPE_MAX).contains(&slope),
        format!("slope {slope:.3}, all cells complete: {complete}"),
    );
    s.figures.push(fig);
    Ok(())
}

fn summarize_prey(records: &[RunRecord], s: &mut Summary) -> Result<()> {
    let mut points = Vec::new();
    let mut fig = Figure {
        name: "prey_mixture".into(),
        columns: vec!["eps".into(), "detection_rate".into(), "mean_tau".into(), "std_error".into()],
        rows: vec![],
    };
    for g in groups_in_order(records) {
        let Some(eps) = group_param(&g, "eps") else { continue };
        let (seen, censored) = taus(records, &g);
        let rate = seen.len() as f64 / (seen.len() + censored) as f64;
        let m = mean(&seen);
        s.stat(&g, "detection_rate", rate);
        s.stat(&g, "mean_tau", m);
        s.stat(&g, "std_error", std_error(&seen));
        fig.rows.push(vec![eps, rate, m, std_error(&seen)]);
        if eps >= bounds::PREY_CHECK_FROM {
            s.check(
                format!("prey-detection[{g}]"),
                rate >= bounds::PREY_DETECTION_RATE,
                format!("{rate:.3}"),
            );
            points.push((eps, m));
        }
    }
    let (slope, intercept) = fit_loglog_slope(&points)?;
    s.stat("fit", "slope", slope);
    s.stat("fit", "intercept", intercept);
    s.check(
        "prey-slope",
        (bounds::SLOPE_MIN..=bounds::SLOPE_MAX).contains(&slope),
        format!("{slope:.3}"),
    );
    if let Some(first) = in_group(records, "first-step").next() {
        s.stat("first-step", "mixture_value", first.metric);
        s.check(
            "prey-first-step",
            (first.metric - bounds::PREY_FIRST_STEP).abs() <= bounds::PREY_FIRST_STEP_TOL,
            format!("{:.5}", first.metric),
        );
    }
    s.figures.push(fig);
    Ok(())
}

fn summarize_kl(records: &[RunRecord], s: &mut Summary) {
    let mut fig = Figure {
        name: "kl_check".into(),
        columns: vec!["eps".into(), "mean_ratio".into(), "max_deviation".into()],
        rows: vec![],
    };
    for g in groups_in_order(records) {
        let ratios: Vec<f64> = in_group(records, &g).map(|r| r.metric).collect();
        let dev = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        s.stat(&g, "pairs", ratios.len() as f64);
        s.stat(&g, "mean_ratio", mean(&ratios));
        s.stat(&g, "max_deviation", dev);
        let eps = group_param(&g, "eps").unwrap_or(f64::NAN);
        if eps == bounds::KL_CHECK_EPS {
            s.check(
                "kl-quadratic",
                dev <= bounds::KL_RATIO_TOL && !ratios.iter().any(|r| r.is_nan()),
                format!("max |ratio - 1| = {dev:.2e} over {} pairs", ratios.len()),
            );
        }
        fig.rows.push(vec![eps, mean(&ratios), dev]);
    }
    s.figures.push(fig);
}

fn summarize_oracles(records: &[RunRecord], s: &mut Summary) {
    let cases = [
        ("quadrature", bounds::QUADRATURE_REL_TOL),
        ("matrix-game", bounds::EXPLOITABILITY_TOL),
        ("pennies", bounds::PENNIES_TOL),
        ("ebh-level", 0.0),
        ("nash-slack", bounds::NASH_SLACK_TOL),
        ("gain-player=0", bounds::GAIN_TOL),
        ("gain-player=1", bounds::GAIN_TOL),
        ("lr-normalization", bounds::NORMALIZATION_TOL),
    ];
    for (group, tol) in cases {
        let n = in_group(records, group).count();
        let worst = max_metric(records, group);
        s.stat(group, "cases", n as f64);
        s.stat(group, "max_error", worst);
        let ok = n > 0 && in_group(records, group).all(|r| r.metric <= tol);
        s.check(group, ok, format!("max error {worst:.2e} over {n} cases (tol {tol:e})"));
    }
}
