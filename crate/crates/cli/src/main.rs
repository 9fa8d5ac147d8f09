//! `ransleep` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input data, 3 runtime
//! failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ransleep::agents::AgentKind;
use ransleep::harness::{
    self, export_metrics, ingest_kpi_csv, load_checkpoint, save_checkpoint, Checkpoint, IngestOptions,
    MethodRun, RunConfig,
};
use ransleep::oracle::{enumerate_shutdowns, evaluate_states, PolicyEvaluation};
use ransleep::{Error, ScenarioState};

#[derive(Parser)]
#[command(name = "ransleep", version, about = "Energy-aware cell shutdown simulator and RL harness")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent and write its checkpoint and training curve.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        agent: AgentKind,
        /// Environment steps; overrides `run.budget`.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint greedily against the oracle.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenarios: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score every single-cell shutdown of one scenario.
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a checkpoint over KPI snapshots from a CSV file.
    Ingest {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Replace per-cell aggregates with synthetic UEs.
        #[arg(long)]
        synthesize_ues: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate every agent kind and export comparison CSVs.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scenarios: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            // help requested via missing arguments is still a usage error
            let code = if e.kind() == clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                1
            } else {
                code
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 3 })
        }
    }
}

fn load_config(
    path: Option<&Path>,
    seed: Option<u64>,
    steps: Option<usize>,
    scenarios: Option<usize>,
) -> Result<RunConfig, Error> {
    let mut cfg = match path {
        Some(p) => {
            require_input(p)?;
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = steps {
        cfg.budget = n;
    }
    if let Some(n) = scenarios {
        cfg.eval_scenarios = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Missing input files are bad input, not a runtime failure.
fn require_input(path: &Path) -> Result<(), Error> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config {
            key: path.display().to_string(),
            reason: "input file does not exist".into(),
        })
    }
}

fn run(command: Command) -> Result<(), Error> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Train {
            config,
            agent,
            steps,
            seed,
            out: dir,
        } => {
            let cfg = load_config(config.as_deref(), seed, steps, None)?;
            let outcome = harness::train_agent(&cfg, agent)?;
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let ckpt = dir.join(format!("{agent}.ckpt"));
            save_checkpoint(&Checkpoint::from_agent(&outcome.agent, outcome.seed), &ckpt)?;
            harness::write_config(&cfg, &dir)?;
            let eval = empty_eval();
            export_metrics(
                &[MethodRun {
                    method: agent.to_string(),
                    curve: outcome.curve.clone(),
                    evaluation: eval,
                }],
                &dir,
            )?;
            let last = outcome.curve.last().map_or(f64::NAN, |c| c.mean_reward);
            say(&mut out, format_args!(
                "trained {agent} for {} steps, final window mean reward {last}\ncheckpoint: {}",
                outcome.steps,
                ckpt.display()
            ));
        }
        Command::Eval {
            checkpoint,
            config,
            scenarios,
            seed,
            out: dir,
        } => {
            require_input(&checkpoint)?;
            let ckpt = load_checkpoint(&checkpoint)?;
            let cfg = load_config(config.as_deref(), seed, None, scenarios)?;
            let eval = harness::evaluate_checkpoint(&ckpt, &cfg)?;
            print_summary(&mut out, ckpt.agent.as_str(), &eval);
            export_metrics(
                &[MethodRun {
                    method: ckpt.agent.to_string(),
                    curve: Vec::new(),
                    evaluation: eval,
                }],
                &dir,
            )?;
        }
        Command::Oracle { config, seed } => {
            let cfg = load_config(config.as_deref(), seed, None, None)?;
            let state = ScenarioState::reset(&cfg.env, cfg.seed)?;
            let report = enumerate_shutdowns(&state)?;
            say(&mut out, format_args!("cell,value,g_perf,p_gain,violations"));
            for e in &report.entries {
                say(&mut out, format_args!(
                    "{},{},{},{},{}",
                    e.cell, e.value, e.outcome.g_perf, e.outcome.p_gain, e.violations
                ));
            }
            say(&mut out, format_args!("best cell {} value {}", report.best_cell, report.best_value));
        }
        Command::Ingest {
            csv,
            checkpoint,
            config,
            synthesize_ues,
            out: dir,
        } => {
            require_input(&csv)?;
            require_input(&checkpoint)?;
            let cfg = load_config(config.as_deref(), None, None, None)?;
            let agent = load_checkpoint(&checkpoint)?.into_agent()?;
            let opts = IngestOptions {
                synthesize_ues,
                seed: cfg.seed,
            };
            let states: Vec<(u64, ScenarioState)> = ingest_kpi_csv(&csv, &cfg.env, opts)?
                .into_iter()
                .enumerate()
                .map(|(i, s)| (i as u64, s))
                .collect();
            if states.is_empty() {
                return Err(Error::Schema("the file holds no snapshots".into()));
            }
            let eval = evaluate_states(&agent, &states)?;
            print_summary(&mut out, agent.kind().as_str(), &eval);
            for r in &eval.records {
                say(&mut out, format_args!(
                    "snapshot {}: shut cell {} (value {}), oracle cell {} (value {})",
                    r.seed, r.action, r.policy_value, r.oracle_cell, r.oracle_value
                ));
            }
            export_metrics(
                &[MethodRun {
                    method: agent.kind().to_string(),
                    curve: Vec::new(),
                    evaluation: eval,
                }],
                &dir,
            )?;
        }
        Command::Compare {
            config,
            steps,
            seed,
            scenarios,
            out: dir,
        } => {
            let cfg = load_config(config.as_deref(), seed, steps, scenarios)?;
            let runs = harness::compare_to_dir(&cfg, &dir)?;
            for r in &runs {
                print_summary(&mut out, &r.method, &r.evaluation);
            }
        }
    }
    Ok(())
}

fn empty_eval() -> PolicyEvaluation {
    PolicyEvaluation {
        scenarios: 0,
        mean_policy: 0.0,
        mean_oracle: 0.0,
        regret: 0.0,
        match_rate: 0.0,
        records: Vec::new(),
    }
}

fn print_summary(out: &mut impl Write, method: &str, e: &PolicyEvaluation) {
    say(out, format_args!(
        "{method}: scenarios {} mean objective {} oracle {} regret {} match rate {}",
        e.scenarios, e.mean_policy, e.mean_oracle, e.regret, e.match_rate
    ));
}

fn say(out: &mut impl Write, args: std::fmt::Arguments<'_>) {
    // a closed stdout is not worth failing the run over
    let _ = writeln!(out, "{args}");
}
