//! Exhaustive single-cell shutdown search and policy regret.

use rand::RngCore;

use crate::agents::{ActionMode, Policy};
use crate::env::{EnvConfig, ShutdownOutcome, ViolationSet};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::ScenarioState;

/// Values closer than this to the best count as optimal.
pub const MATCH_TOLERANCE: f64 = 1e-12;

const POLICY_STREAM: u64 = 0x90_11C7;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEntry {
    pub cell: usize,
    pub value: f64,
    pub violations: ViolationSet,
    pub outcome: ShutdownOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    /// One entry per active cell, by cell id.
    pub entries: Vec<OracleEntry>,
    pub best_cell: usize,
    pub best_value: f64,
}

impl OracleReport {
    pub fn entry(&self, cell: usize) -> Option<&OracleEntry> {
        self.entries.iter().find(|e| e.cell == cell)
    }

    /// Whether `cell` attains the best value.
    pub fn is_optimal(&self, cell: usize) -> bool {
        cell == self.best_cell
            || self
                .entry(cell)
                .is_some_and(|e| (e.value - self.best_value).abs() <= MATCH_TOLERANCE)
    }
}

/// Scores every legal shutdown on a clone of `state`. Each candidate uses
/// the state's own derived handover seed, so the value equals what
/// `apply_shutdown` would realize.
pub fn enumerate_shutdowns(state: &ScenarioState) -> Result<OracleReport> {
    if state.active_count() < 2 {
        return Err(Error::IllegalAction(
            "oracle needs at least two active cells".into(),
        ));
    }
    let mut entries = Vec::with_capacity(state.active_count());
    for cell in (0..state.n_cells()).filter(|&c| state.active()[c]) {
        let mut trial = state.clone();
        let outcome = trial.apply_shutdown(cell)?;
        entries.push(OracleEntry {
            cell,
            value: outcome.reward,
            violations: outcome.violations,
            outcome,
        });
    }
    let mut best = &entries[0];
    for e in &entries[1..] {
        if e.value > best.value {
            best = e;
        }
    }
    Ok(OracleReport {
        best_cell: best.cell,
        best_value: best.value,
        entries,
    })
}

/// Throughput and interference of one UE, or of the mean UE of a cell in
/// aggregate scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UePoint {
    pub throughput: f64,
    pub interference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRecord {
    pub seed: u64,
    pub action: usize,
    pub policy_value: f64,
    pub oracle_cell: usize,
    pub oracle_value: f64,
    pub matched: bool,
    /// `None` when the action was illegal.
    pub outcome: Option<ShutdownOutcome>,
    /// After the policy's shutdown.
    pub ue_points: Vec<UePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvaluation {
    pub scenarios: usize,
    pub mean_policy: f64,
    pub mean_oracle: f64,
    /// Mean of oracle minus policy value.
    pub regret: f64,
    pub match_rate: f64,
    pub records: Vec<ScenarioRecord>,
}

impl PolicyEvaluation {
    fn from_records(records: Vec<ScenarioRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::config("eval.scenarios", "must be at least 1"));
        }
        let n = records.len() as f64;
        let mean_policy = records.iter().map(|r| r.policy_value).sum::<f64>() / n;
        let mean_oracle = records.iter().map(|r| r.oracle_value).sum::<f64>() / n;
        let regret = records
            .iter()
            .map(|r| r.oracle_value - r.policy_value)
            .sum::<f64>()
            / n;
        let match_rate = records.iter().filter(|r| r.matched).count() as f64 / n;
        Ok(PolicyEvaluation {
            scenarios: records.len(),
            mean_policy,
            mean_oracle,
            regret,
            match_rate,
            records,
        })
    }
}

/// Applies `action` to a clone of `state` and compares it with the oracle.
pub fn score_action(state: &ScenarioState, action: usize, seed: u64) -> Result<ScenarioRecord> {
    let report = enumerate_shutdowns(state)?;
    let mut after = state.clone();
    let outcome = if after.is_valid_action(action) {
        Some(after.apply_shutdown(action)?)
    } else {
        None
    };
    let policy_value = outcome
        .as_ref()
        .map_or(-state.config().objective.penalty, |o| o.reward);
    let ue_points = if after.is_aggregate() {
        (0..after.n_cells())
            .map(|c| after.cell_aggregates(c))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .filter(|c| c.active && c.n_ues > 0)
            .map(|c| UePoint {
                throughput: c.avg_thp,
                interference: c.tot_interference / c.n_ues as f64,
            })
            .collect()
    } else {
        after
            .ues()
            .iter()
            .map(|u| UePoint {
                throughput: u.throughput,
                interference: u.interference,
            })
            .collect()
    };
    Ok(ScenarioRecord {
        seed,
        action,
        policy_value,
        oracle_cell: report.best_cell,
        oracle_value: report.best_value,
        matched: outcome.is_some() && report.is_optimal(action),
        outcome,
        ue_points,
    })
}

/// Greedy first decision of `policy` on each given state.
pub fn evaluate_states<P: Policy + ?Sized>(
    policy: &P,
    states: &[(u64, ScenarioState)],
) -> Result<PolicyEvaluation> {
    evaluate_with(states, |state, rng| {
        policy.act(&state.observe(), state.active(), ActionMode::Greedy, rng)
    })
}

/// Resets one scenario per seed and evaluates the greedy policy on it.
pub fn evaluate_policy<P: Policy + ?Sized>(
    policy: &P,
    seeds: &[u64],
    config: &EnvConfig,
) -> Result<PolicyEvaluation> {
    let states = seeds
        .iter()
        .map(|&s| Ok((s, ScenarioState::reset(config, s)?)))
        .collect::<Result<Vec<_>>>()?;
    evaluate_states(policy, &states)
}

/// Evaluates an arbitrary chooser; the oracle itself is
/// `|s, _| Ok(enumerate_shutdowns(s)?.best_cell)`.
pub fn evaluate_with<F>(states: &[(u64, ScenarioState)], mut choose: F) -> Result<PolicyEvaluation>
where
    F: FnMut(&ScenarioState, &mut dyn RngCore) -> Result<usize>,
{
    let mut records = Vec::with_capacity(states.len());
    for (seed, state) in states {
        let mut rng = rng_from_seed(derive_seed(*seed, &[POLICY_STREAM]));
        let action = choose(state, &mut rng)?;
        records.push(score_action(state, action, *seed)?);
    }
    PolicyEvaluation::from_records(records)
}
