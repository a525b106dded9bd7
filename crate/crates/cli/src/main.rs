use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use eqsentinel_core::harness::{run_experiment, write_artifacts, ExperimentConfig, ExperimentId};

/// Sequential equilibrium monitoring experiments.
#[derive(Debug, Parser)]
#[command(name = "eqsentinel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// FWER under equilibrium play over a (λ, α) grid.
    NfFwerNull(RunArgs),
    /// FWER against e-BH stopping times under a weak deviation.
    NfDetect(RunArgs),
    /// Stopping times over a λ, α and slack grid.
    NfSensitivity(RunArgs),
    /// Exact stopping rounds in a deterministic game.
    NfSlack(RunArgs),
    /// Shapley iteration on grid soccer.
    SoccerSolve(RunArgs),
    /// Detection time against deviation size in grid soccer.
    SoccerScaling(RunArgs),
    /// Mixture monitor against an unknown chase intensity.
    PreyMixture(RunArgs),
    /// Quadratic behaviour of KL under small mixing.
    KlCheck(RunArgs),
    /// Brute-force cross-checks of the numerical kernels.
    OracleSuite(RunArgs),
    /// Print the built-in config of an experiment.
    Defaults { experiment: String },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory [default: results/<experiment>].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 when an acceptance statistic fails.
    #[arg(long)]
    assert: bool,
}

impl Command {
    fn split(self) -> std::result::Result<(ExperimentId, RunArgs), String> {
        Ok(match self {
            Command::NfFwerNull(a) => (ExperimentId::NfFwerNull, a),
            Command::NfDetect(a) => (ExperimentId::NfDetect, a),
            Command::NfSensitivity(a) => (ExperimentId::NfSensitivity, a),
            Command::NfSlack(a) => (ExperimentId::NfSlack, a),
            Command::SoccerSolve(a) => (ExperimentId::SoccerSolve, a),
            Command::SoccerScaling(a) => (ExperimentId::SoccerScaling, a),
            Command::PreyMixture(a) => (ExperimentId::PreyMixture, a),
            Command::KlCheck(a) => (ExperimentId::KlCheck, a),
            Command::OracleSuite(a) => (ExperimentId::OracleSuite, a),
            Command::Defaults { experiment } => return Err(experiment),
        })
    }
}

fn load_config(id: ExperimentId, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::parse(&text, Some(id)).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentConfig::defaults(id),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(runs) = args.runs {
        config.runs = runs;
    }
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (id, args) = match cli.command.split() {
        Ok(pair) => pair,
        Err(name) => {
            let id: ExperimentId = name.parse()?;
            print!("{}", ExperimentConfig::defaults(id).to_text());
            return Ok(ExitCode::SUCCESS);
        }
    };
    let config = load_config(id, &args)?;
    let dir = config
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(id.as_str()));
    let output = run_experiment(&config)?;
    write_artifacts(&dir, &output)?;

    println!("{id}: {} runs, seed {}, artifacts in {}", output.records.len(), config.seed, dir.display());
    for check in &output.summary.checks {
        let tag = if check.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {}", check.name, check.detail);
    }
    if args.assert && !output.summary.all_passed() {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // Usage errors exit with 1; status 2 is reserved for failed assertions.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
