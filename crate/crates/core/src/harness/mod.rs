//! Configuration, KPI ingestion, checkpoints, metric export and the
//! train/evaluate/compare pipelines the CLI drives.

pub mod checkpoint;
pub mod config;
pub mod export;
pub mod kpi;

use std::path::{Path, PathBuf};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::RunConfig;
pub use export::{export_metrics, MethodRun};
pub use kpi::{ingest_kpi_csv, parse_kpi_csv, read_kpi_csv, IngestOptions, KpiRow, KpiSnapshot};

use crate::agents::{train, AgentKind, TrainOptions, TrainOutcome};
use crate::error::{Error, Result};
use crate::oracle::{evaluate_policy, PolicyEvaluation};
use crate::rng::derive_seed;

/// Stream tag for held-out evaluation scenario seeds.
pub const EVAL_STREAM: u64 = 0xE7A1;

/// Held-out scenario seeds, disjoint in derivation from training episodes.
pub fn eval_seeds(seed: u64, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| derive_seed(seed, &[EVAL_STREAM, i])).collect()
}

pub fn train_agent(cfg: &RunConfig, agent: AgentKind) -> Result<TrainOutcome> {
    let opts = TrainOptions {
        agent,
        budget_steps: cfg.budget,
        seed: cfg.seed,
        ppo: cfg.ppo.clone(),
        sarsa: cfg.sarsa.clone(),
    };
    train(&cfg.env, &opts)
}

/// Trains every agent kind with the same budget and seed and evaluates
/// each greedily on the same held-out scenarios.
pub fn compare(cfg: &RunConfig) -> Result<Vec<(TrainOutcome, MethodRun)>> {
    cfg.validate()?;
    let seeds = eval_seeds(cfg.seed, cfg.eval_scenarios);
    AgentKind::ALL
        .iter()
        .map(|&kind| {
            let outcome = train_agent(cfg, kind)?;
            let evaluation = evaluate_policy(&outcome.agent, &seeds, &cfg.env)?;
            let run = MethodRun {
                method: kind.to_string(),
                curve: outcome.curve.clone(),
                evaluation,
            };
            Ok((outcome, run))
        })
        .collect()
}

/// `compare` plus every artifact: CSVs, one checkpoint per method and the
/// resolved configuration.
pub fn compare_to_dir(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<MethodRun>> {
    let results = compare(cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (outcome, run) in &results {
        let path = out_dir.join(format!("{}.ckpt", run.method));
        save_checkpoint(&Checkpoint::from_agent(&outcome.agent, outcome.seed), &path)?;
    }
    write_config(cfg, out_dir)?;
    let runs: Vec<MethodRun> = results.into_iter().map(|(_, r)| r).collect();
    export_metrics(&runs, out_dir)?;
    Ok(runs)
}

/// Archives the resolved configuration beside the outputs.
pub fn write_config(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml_string()?).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Greedy evaluation of a checkpointed agent on held-out scenarios.
pub fn evaluate_checkpoint(ckpt: &Checkpoint, cfg: &RunConfig) -> Result<PolicyEvaluation> {
    let agent = ckpt.clone().into_agent()?;
    let seeds = eval_seeds(cfg.seed, cfg.eval_scenarios);
    evaluate_policy(&agent, &seeds, &cfg.env)
}
