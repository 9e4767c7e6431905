//! Experiment runner: training, evaluation, verification, zero-shot and
//! transfer runs, and plot-data export.

pub mod config;
pub mod error;
pub mod plots;
pub mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use symmarl::envs::NavConfig;
use symmarl::marl::{
    evaluate, evaluate_learner, heuristic_policy, maddpg_train, random_policy, transfer, write_metrics_row, zero_shot_eval, Maddpg, MetricRow,
    TrainOutput, TrainingConfig, METRICS_HEADER,
};

pub use config::{load_config, parse_config, ExperimentConfig, OUTPUT_ROOT_VAR};
pub use error::CliError;
use plots::{mean_std, METRICS_FILE, SEED_PREFIX};

#[derive(Debug, Parser)]
#[command(name = "symmarl", version, about = "Symmetric multi-agent RL experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one run per configured seed.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Greedy evaluation of a checkpoint against random and heuristic baselines.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 50)]
        episodes: usize,
        /// Evaluation seed; defaults to the checkpoint's.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabular theorem checks and the equivariance battery.
    Verify {
        /// Break the gridworld's symmetry by adding this much to one reward.
        #[arg(long, num_args = 0..=1, default_missing_value = "0.5")]
        perturb_reward: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a trained actor on a game with a different agent count.
    ZeroShot {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        agents: usize,
        #[arg(long, default_value_t = 50)]
        episodes: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// A seed directory or metrics CSV whose first and last returns map to 0 and 1.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Continue training from a checkpoint under a new config.
    Transfer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Aggregate per-seed metrics of a run into mean and std series.
    ExportPlots {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub label: String,
    pub env: String,
    pub num_agents: usize,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub final_returns: Vec<f64>,
    pub mean_final_return: f64,
    /// Population standard deviation across seeds.
    pub std_final_return: f64,
    pub config: TrainingConfig,
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const CHECKPOINT_DIR: &str = "checkpoint";

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("{SEED_PREFIX}{seed}"))
}

/// Runs `train` for every seed, streaming metrics so a failed run keeps its
/// rows. `start` builds the run from a per-seed config.
fn run_seeds(
    exp: &ExperimentConfig,
    start: &dyn Fn(TrainingConfig, &mut dyn FnMut(&MetricRow, &symmarl::lab::InvariancyReport)) -> symmarl::Result<TrainOutput>,
) -> Result<Summary, CliError> {
    let out = exp.output_dir();
    std::fs::create_dir_all(&out)?;
    let mut finals = Vec::new();
    for &seed in &exp.seeds {
        let dir = seed_dir(&out, seed);
        std::fs::create_dir_all(&dir)?;
        let mut csv = BufWriter::new(File::create(dir.join(METRICS_FILE))?);
        writeln!(csv, "{METRICS_HEADER}")?;
        let mut io_err = None;
        let result = start(exp.for_seed(seed), &mut |row, _| {
            if let Err(e) = write_metrics_row(&mut csv, row).and_then(|_| csv.flush().map_err(Into::into)) {
                io_err.get_or_insert(e);
            }
        });
        csv.flush()?;
        if let Some(e) = io_err {
            return Err(e.into());
        }
        let run = result.map_err(|e| CliError::Runtime(format!("seed {seed}: {e}; partial metrics kept in {}", dir.display())))?;
        run.learner.save(&dir.join(CHECKPOINT_DIR))?;
        let last = run.metrics.last().map_or(f64::NAN, |m| m.ret);
        log::info!("{} seed {seed}: final eval return {last:.3}", exp.label());
        finals.push(last);
    }
    let (mean, std) = mean_std(&finals);
    let summary = Summary {
        label: exp.label(),
        env: exp.env_name.clone(),
        num_agents: exp.training.env.num_agents,
        episodes: exp.training.episodes,
        seeds: exp.seeds.clone(),
        final_returns: finals,
        mean_final_return: mean,
        std_final_return: std,
        config: exp.training.clone(),
    };
    std::fs::write(out.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

pub fn cmd_train(config: &Path) -> Result<Summary, CliError> {
    let exp = load_config(config)?;
    run_seeds(&exp, &|cfg, hook| maddpg_train(cfg, hook))
}

pub fn cmd_transfer(checkpoint: &Path, config: &Path) -> Result<Summary, CliError> {
    require_checkpoint(checkpoint)?;
    let exp = load_config(config)?;
    run_seeds(&exp, &|cfg, hook| transfer(checkpoint, cfg, hook))
}

fn require_checkpoint(p: &Path) -> Result<(), CliError> {
    if p.join("meta.json").is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("checkpoint not found: {} (expected a directory with meta.json)", p.display())))
    }
}

#[derive(Debug, Serialize)]
pub struct EvalSummary {
    pub label: String,
    pub num_agents: usize,
    pub episodes: usize,
    pub seed: u64,
    pub mean_return: f64,
    pub random_mean_return: f64,
    pub heuristic_mean_return: f64,
    pub actor_rotation_invariancy: Option<f64>,
    pub critic_rotation_invariancy: Option<f64>,
    /// `(return − reference start) / (reference end − reference start)`.
    pub normalized_score: Option<f64>,
}

fn baselines(env: &NavConfig, episodes: usize, seed: u64) -> symmarl::Result<(f64, f64)> {
    let mut random = random_policy(env.clone(), seed);
    let mut heuristic = heuristic_policy(env.clone());
    Ok((evaluate(env, &mut random, episodes, seed)?.mean, evaluate(env, &mut heuristic, episodes, seed)?.mean))
}

pub fn cmd_evaluate(checkpoint: &Path, episodes: usize, seed: Option<u64>) -> Result<EvalSummary, CliError> {
    require_checkpoint(checkpoint)?;
    let saved = Maddpg::load(checkpoint)?;
    let seed = seed.unwrap_or(saved.config().eval_seed);
    let cfg = TrainingConfig {
        eval_episodes: episodes,
        eval_seed: seed,
        invariancy_samples: episodes,
        ..saved.config().clone()
    };
    let learner = Maddpg::load_with_config(checkpoint, cfg.clone())?;
    let (eval, inv) = evaluate_learner(&learner)?;
    let (random, heuristic) = baselines(&cfg.env, episodes, seed)?;
    Ok(EvalSummary {
        label: cfg.label(),
        num_agents: cfg.env.num_agents,
        episodes,
        seed,
        mean_return: eval.mean,
        random_mean_return: random,
        heuristic_mean_return: heuristic,
        actor_rotation_invariancy: Some(inv.actor_rotation.value),
        critic_rotation_invariancy: Some(inv.critic_rotation.value),
        normalized_score: None,
    })
}

/// First and last logged return of a reference run.
pub fn reference_endpoints(p: &Path) -> Result<(f64, f64), CliError> {
    let file = if p.is_dir() { p.join(METRICS_FILE) } else { p.to_path_buf() };
    if !file.is_file() {
        return Err(CliError::Usage(format!("reference metrics not found: {}", file.display())));
    }
    let t = plots::read_metrics(&file)?;
    let ret = &t.columns[0];
    match (ret.first(), ret.last()) {
        (Some(&a), Some(&b)) if a != b => Ok((a, b)),
        (Some(_), Some(_)) => Err(CliError::Runtime(format!("{}: reference start and end coincide", file.display()))),
        _ => Err(CliError::Runtime(format!("{}: no logged returns", file.display()))),
    }
}

pub fn normalize(value: f64, (start, end): (f64, f64)) -> f64 {
    (value - start) / (end - start)
}

pub fn cmd_zero_shot(
    checkpoint: &Path,
    agents: usize,
    episodes: usize,
    seed: Option<u64>,
    reference: Option<&Path>,
) -> Result<EvalSummary, CliError> {
    require_checkpoint(checkpoint)?;
    let learner = Maddpg::load(checkpoint)?;
    let seed = seed.unwrap_or(learner.config().eval_seed);
    let mut env = learner.config().env.clone();
    env.num_agents = agents;
    env.num_landmarks = agents;
    let endpoints = reference.map(reference_endpoints).transpose()?;
    let eval = zero_shot_eval(&learner, &env, episodes, seed)?;
    let (random, heuristic) = baselines(&env, episodes, seed)?;
    Ok(EvalSummary {
        label: learner.config().label(),
        num_agents: agents,
        episodes,
        seed,
        mean_return: eval.mean,
        random_mean_return: random,
        heuristic_mean_return: heuristic,
        actor_rotation_invariancy: None,
        critic_rotation_invariancy: None,
        normalized_score: endpoints.map(|e| normalize(eval.mean, e)),
    })
}

/// Prints every group; fails with the first failing assertion.
pub fn cmd_verify(opts: &verify::VerifyOptions) -> Result<Vec<verify::Group>, CliError> {
    let groups = verify::run_suite(opts);
    for g in &groups {
        let total: usize = g.checks.iter().map(|c| c.count).sum();
        println!("{} {}: {} checks, {total} comparisons", if g.passed() { "PASS" } else { "FAIL" }, g.name, g.checks.len());
        if let Some(e) = &g.error {
            println!("  error: {e}");
        }
        for c in &g.checks {
            println!("  {c}");
        }
    }
    match groups.iter().find_map(verify::Group::first_failure) {
        Some(f) => Err(CliError::Verification(f)),
        None => Ok(groups),
    }
}

fn print_json<T: Serialize>(v: &T) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config } => print_json(&cmd_train(&config)?),
        Command::Transfer { checkpoint, config } => print_json(&cmd_transfer(&checkpoint, &config)?),
        Command::Evaluate { checkpoint, episodes, seed } => print_json(&cmd_evaluate(&checkpoint, episodes, seed)?),
        Command::ZeroShot {
            checkpoint,
            agents,
            episodes,
            seed,
            reference,
        } => print_json(&cmd_zero_shot(&checkpoint, agents, episodes, seed, reference.as_deref())?),
        Command::Verify { perturb_reward, seed } => cmd_verify(&verify::VerifyOptions { perturb_reward, seed }).map(|_| ()),
        Command::ExportPlots { run } => {
            for p in plots::export_plots(&run)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}
