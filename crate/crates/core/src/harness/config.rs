//! TOML run configuration. Every key is optional; missing keys keep their
//! defaults and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{PpoHyper, SarsaHyper};
use crate::env::{EnvConfig, HandoverWeighting, ScenarioKind};
use crate::error::{Error, Result};

/// Everything a run needs besides the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub ppo: PpoHyper,
    pub sarsa: SarsaHyper,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Training budget in environment steps.
    pub budget: usize,
    pub eval_scenarios: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            env: EnvConfig::default(),
            ppo: PpoHyper::default(),
            sarsa: SarsaHyper::default(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            budget: 200_000,
            eval_scenarios: 20,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.ppo.validate()?;
        self.sarsa.validate()?;
        if self.seed > i64::MAX as u64 {
            return Err(Error::config("run.seed", "must fit in a signed 64-bit integer"));
        }
        if self.eval_scenarios == 0 {
            return Err(Error::config("run.eval_scenarios", "must be at least 1"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: FileConfig = toml::from_str(text).map_err(|e| {
            Error::config(
                "config",
                e.message().to_string()
                    + &e.span().map(|s| format!(" (at byte {})", s.start)).unwrap_or_default(),
            )
        })?;
        let cfg = file.into_run()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Full configuration with every key spelled out.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(&FileConfig::from_run(self))
            .map_err(|e| Error::config("config", e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    run: RunSection,
    topology: TopologySection,
    traffic: TrafficSection,
    radio: RadioSection,
    power: PowerSection,
    objective: ObjectiveSection,
    handover: HandoverSection,
    ppo: PpoSection,
    sarsa: SarsaSection,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig::from_run(&RunConfig::default())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunSection {
    seed: u64,
    out_dir: PathBuf,
    budget: usize,
    eval_scenarios: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TopologySection {
    rows: usize,
    cols: usize,
    inter_site_distance: f64,
    neighbors: usize,
    cell_radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TrafficSection {
    ues: usize,
    demand_min: f64,
    demand_max: f64,
    /// "uniform" or "planted_empty".
    scenario: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RadioSection {
    tx_power_dbm: f64,
    carrier_ghz: f64,
    bs_height: f64,
    ut_height: f64,
    prb_bandwidth_hz: f64,
    noise_dbm: f64,
    interference_alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PowerSection {
    p_idle_w: f64,
    p_prb_w: f64,
    eta: f64,
    p_max_w: f64,
    prb_capacity: u32,
    prb_floor: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ObjectiveSection {
    w_perf: f64,
    w_power: f64,
    delta: f64,
    interference_factor: f64,
    gain_smoothing: f64,
    penalty: f64,
    horizon: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HandoverSection {
    epsilon: f64,
    /// "load" or "available_prbs".
    weighting: String,
    a3_offset_db: f64,
    redistribute: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PpoSection {
    learning_rate: f64,
    batch_size: usize,
    gamma: f64,
    gae_lambda: f64,
    clip_epsilon: f64,
    value_coeff: f64,
    entropy_coeff: f64,
    epochs: usize,
    rollout_length: usize,
    hidden: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SarsaSection {
    learning_rate: f64,
    gamma: f64,
    epsilon_start: f64,
    epsilon_end: f64,
}

macro_rules! section_default {
    ($($ty:ident => $field:ident),* $(,)?) => {
        $(impl Default for $ty {
            fn default() -> Self {
                FileConfig::from_run(&RunConfig::default()).$field
            }
        })*
    };
}

section_default!(
    RunSection => run,
    TopologySection => topology,
    TrafficSection => traffic,
    RadioSection => radio,
    PowerSection => power,
    ObjectiveSection => objective,
    HandoverSection => handover,
    PpoSection => ppo,
    SarsaSection => sarsa,
);

fn scenario_name(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Uniform => "uniform",
        ScenarioKind::PlantedEmpty => "planted_empty",
    }
}

fn weighting_name(w: HandoverWeighting) -> &'static str {
    match w {
        HandoverWeighting::Load => "load",
        HandoverWeighting::AvailablePrbs => "available_prbs",
    }
}

impl FileConfig {
    fn from_run(r: &RunConfig) -> Self {
        let e = &r.env;
        FileConfig {
            run: RunSection {
                seed: r.seed,
                out_dir: r.out_dir.clone(),
                budget: r.budget,
                eval_scenarios: r.eval_scenarios,
            },
            topology: TopologySection {
                rows: e.rows,
                cols: e.cols,
                inter_site_distance: e.inter_site_distance,
                neighbors: e.neighbor_count,
                cell_radius: e.cell_radius,
            },
            traffic: TrafficSection {
                ues: e.n_ues,
                demand_min: e.demand_min,
                demand_max: e.demand_max,
                scenario: scenario_name(e.scenario).to_string(),
            },
            radio: RadioSection {
                tx_power_dbm: e.radio.ptx_dbm,
                carrier_ghz: e.radio.carrier_ghz,
                bs_height: e.radio.h_bs,
                ut_height: e.radio.h_ut,
                prb_bandwidth_hz: e.radio.prb_bandwidth_hz,
                noise_dbm: e.radio.noise_dbm,
                interference_alpha: e.radio.interference_alpha,
            },
            power: PowerSection {
                p_idle_w: e.power.p_idle_w,
                p_prb_w: e.power.p_prb_w,
                eta: e.power.eta,
                p_max_w: e.power.p_max_w,
                prb_capacity: e.power.prb_capacity,
                prb_floor: e.power.prb_floor,
            },
            objective: ObjectiveSection {
                w_perf: e.objective.w_perf,
                w_power: e.objective.w_power,
                delta: e.objective.delta,
                interference_factor: e.objective.interference_factor,
                gain_smoothing: e.objective.gain_smoothing,
                penalty: e.objective.penalty,
                horizon: e.horizon,
            },
            handover: HandoverSection {
                epsilon: e.handover.epsilon,
                weighting: weighting_name(e.handover.weighting).to_string(),
                a3_offset_db: e.handover.a3_offset_db,
                redistribute: e.handover.redistribute,
            },
            ppo: PpoSection {
                learning_rate: r.ppo.learning_rate,
                batch_size: r.ppo.batch_size,
                gamma: r.ppo.gamma,
                gae_lambda: r.ppo.gae_lambda,
                clip_epsilon: r.ppo.clip_epsilon,
                value_coeff: r.ppo.value_coeff,
                entropy_coeff: r.ppo.entropy_coeff,
                epochs: r.ppo.epochs,
                rollout_length: r.ppo.rollout_length,
                hidden: r.ppo.hidden.clone(),
            },
            sarsa: SarsaSection {
                learning_rate: r.sarsa.learning_rate,
                gamma: r.sarsa.gamma,
                epsilon_start: r.sarsa.epsilon_start,
                epsilon_end: r.sarsa.epsilon_end,
            },
        }
    }

    fn into_run(self) -> Result<RunConfig> {
        let scenario = match self.traffic.scenario.as_str() {
            "uniform" => ScenarioKind::Uniform,
            "planted_empty" => ScenarioKind::PlantedEmpty,
            other => {
                return Err(Error::config(
                    "traffic.scenario",
                    format!("unknown scenario `{other}`"),
                ))
            }
        };
        let weighting = match self.handover.weighting.as_str() {
            "load" => HandoverWeighting::Load,
            "available_prbs" => HandoverWeighting::AvailablePrbs,
            other => {
                return Err(Error::config(
                    "handover.weighting",
                    format!("unknown weighting `{other}`"),
                ))
            }
        };
        let mut env = EnvConfig {
            rows: self.topology.rows,
            cols: self.topology.cols,
            inter_site_distance: self.topology.inter_site_distance,
            neighbor_count: self.topology.neighbors,
            cell_radius: self.topology.cell_radius,
            n_ues: self.traffic.ues,
            demand_min: self.traffic.demand_min,
            demand_max: self.traffic.demand_max,
            horizon: self.objective.horizon,
            scenario,
            ..EnvConfig::default()
        };
        env.radio.ptx_dbm = self.radio.tx_power_dbm;
        env.radio.carrier_ghz = self.radio.carrier_ghz;
        env.radio.h_bs = self.radio.bs_height;
        env.radio.h_ut = self.radio.ut_height;
        env.radio.prb_bandwidth_hz = self.radio.prb_bandwidth_hz;
        env.radio.noise_dbm = self.radio.noise_dbm;
        env.radio.interference_alpha = self.radio.interference_alpha;
        env.power.p_idle_w = self.power.p_idle_w;
        env.power.p_prb_w = self.power.p_prb_w;
        env.power.eta = self.power.eta;
        env.power.p_max_w = self.power.p_max_w;
        env.power.prb_capacity = self.power.prb_capacity;
        env.power.prb_floor = self.power.prb_floor;
        env.objective.w_perf = self.objective.w_perf;
        env.objective.w_power = self.objective.w_power;
        env.objective.delta = self.objective.delta;
        env.objective.interference_factor = self.objective.interference_factor;
        env.objective.gain_smoothing = self.objective.gain_smoothing;
        env.objective.penalty = self.objective.penalty;
        env.handover.epsilon = self.handover.epsilon;
        env.handover.weighting = weighting;
        env.handover.a3_offset_db = self.handover.a3_offset_db;
        env.handover.redistribute = self.handover.redistribute;
        Ok(RunConfig {
            env,
            ppo: PpoHyper {
                learning_rate: self.ppo.learning_rate,
                batch_size: self.ppo.batch_size,
                gamma: self.ppo.gamma,
                gae_lambda: self.ppo.gae_lambda,
                clip_epsilon: self.ppo.clip_epsilon,
                value_coeff: self.ppo.value_coeff,
                entropy_coeff: self.ppo.entropy_coeff,
                epochs: self.ppo.epochs,
                rollout_length: self.ppo.rollout_length,
                hidden: self.ppo.hidden,
            },
            sarsa: SarsaHyper {
                learning_rate: self.sarsa.learning_rate,
                gamma: self.sarsa.gamma,
                epsilon_start: self.sarsa.epsilon_start,
                epsilon_end: self.sarsa.epsilon_end,
            },
            seed: self.run.seed,
            out_dir: self.run.out_dir,
            budget: self.run.budget,
            eval_scenarios: self.run.eval_scenarios,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.env.n_ues, 40);
        assert_eq!(cfg.env.power.prb_capacity, 100);
        assert_eq!(cfg.env.power.prb_floor, 10);
        assert_eq!(cfg.ppo.learning_rate, 1e-5);
        assert_eq!(cfg.ppo.batch_size, 64);
        assert_eq!(cfg.env.neighbor_count, 4);
    }

    #[test]
    fn single_override_changes_one_field() {
        let cfg = RunConfig::from_toml_str("[traffic]\nues = 80\n").unwrap();
        let mut expected = RunConfig::default();
        expected.env.n_ues = 80;
        assert_eq!(cfg, expected);
    }

    #[test]
    fn invariant_violation_names_the_key() {
        let err = RunConfig::from_toml_str("[ppo]\ngamma = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("ppo.gamma"), "{err}");
        let err = RunConfig::from_toml_str("[traffic]\nscenario = \"x\"\n").unwrap_err();
        assert!(err.to_string().contains("traffic.scenario"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("[ppo]\ngama = 0.9\n").is_err());
        assert!(RunConfig::from_toml_str("[extra]\nx = 1\n").is_err());
        assert!(RunConfig::from_toml_str("[ppo]\ngamma = \"high\"\n").is_err());
    }

    #[test]
    fn serialization_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.env.scenario = ScenarioKind::PlantedEmpty;
        cfg.env.handover.weighting = HandoverWeighting::AvailablePrbs;
        cfg.ppo.hidden = vec![16, 8];
        cfg.seed = 42;
        let text = cfg.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml_string().unwrap(), text);
    }
}
