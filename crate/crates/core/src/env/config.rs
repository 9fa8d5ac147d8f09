use crate::error::{Error, Result};
use crate::radio::RadioConstants;
use crate::topology::NetworkLayout;

/// Cell power-model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerParams {
    pub p_idle_w: f64,
    /// Transmit power drawn per allocated PRB, W.
    pub p_prb_w: f64,
    /// Power amplifier efficiency in (0, 1].
    pub eta: f64,
    /// Normalizer of the power gain, W.
    pub p_max_w: f64,
    /// Maximum PRBs a cell can carry, signalling overhead included.
    pub prb_capacity: u32,
    /// Signalling PRBs every active cell carries regardless of load.
    pub prb_floor: u32,
}

impl Default for PowerParams {
    fn default() -> Self {
        PowerParams {
            p_idle_w: 100.0,
            p_prb_w: 0.4,
            eta: 0.3,
            p_max_w: 40.0,
            prb_capacity: 100,
            prb_floor: 10,
        }
    }
}

impl PowerParams {
    pub fn validate(&self) -> Result<()> {
        positive("power.p_idle_w", self.p_idle_w)?;
        positive("power.p_prb_w", self.p_prb_w)?;
        positive("power.p_max_w", self.p_max_w)?;
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::config("power.eta", "must lie in (0, 1]"));
        }
        if self.prb_capacity == 0 {
            return Err(Error::config("power.prb_capacity", "must be positive"));
        }
        if self.prb_floor >= self.prb_capacity {
            return Err(Error::config(
                "power.prb_floor",
                "must be below prb_capacity",
            ));
        }
        Ok(())
    }

    /// PRBs left for UE traffic once the signalling floor is reserved.
    pub fn user_capacity(&self) -> u32 {
        self.prb_capacity - self.prb_floor
    }
}

/// Objective weights, constraint thresholds and penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveParams {
    pub w_perf: f64,
    pub w_power: f64,
    /// Minimum retained fraction of the network average throughput.
    pub delta: f64,
    /// Interference threshold as a multiple of the pre-shutdown total.
    pub interference_factor: f64,
    /// Smoothing constant added to per-cell throughput denominators, bit/s.
    pub gain_smoothing: f64,
    /// Reward deducted per violated constraint and for invalid actions.
    pub penalty: f64,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        ObjectiveParams {
            w_perf: 0.4,
            w_power: 0.6,
            delta: 0.9,
            interference_factor: 1.1,
            gain_smoothing: 1.0,
            penalty: 1.0,
        }
    }
}

impl ObjectiveParams {
    pub fn validate(&self) -> Result<()> {
        nonneg("objective.w_perf", self.w_perf)?;
        nonneg("objective.w_power", self.w_power)?;
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::config("objective.delta", "must lie in [0, 1]"));
        }
        nonneg("objective.interference_factor", self.interference_factor)?;
        positive("objective.gain_smoothing", self.gain_smoothing)?;
        nonneg("objective.penalty", self.penalty)?;
        Ok(())
    }
}

/// Which per-neighbor load enters the handover weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandoverWeighting {
    /// PRBs in use at the neighbor.
    Load,
    /// PRBs still free at the neighbor.
    AvailablePrbs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandoverParams {
    /// Regularizer of the inverse-square distance weight, m².
    pub epsilon: f64,
    pub weighting: HandoverWeighting,
    /// A3 offset used for the handover diagnostic, dB.
    pub a3_offset_db: f64,
    /// When false, UEs of a shut cell are dropped instead of handed over.
    pub redistribute: bool,
}

impl Default for HandoverParams {
    fn default() -> Self {
        HandoverParams {
            epsilon: 1.0,
            weighting: HandoverWeighting::Load,
            a3_offset_db: 3.0,
            redistribute: true,
        }
    }
}

/// How UEs are laid out at reset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Each UE picks a site uniformly and a point uniformly in its disc.
    Uniform,
    /// One randomly chosen cell is left empty and the UEs of the cells it
    /// interferes with crowd towards it; every other cell gets at least
    /// one UE.
    PlantedEmpty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub rows: usize,
    pub cols: usize,
    pub inter_site_distance: f64,
    pub neighbor_count: usize,
    /// UE placement radius around each site, m.
    pub cell_radius: f64,
    pub n_ues: usize,
    /// UE demand range, bit/s.
    pub demand_min: f64,
    pub demand_max: f64,
    pub radio: RadioConstants,
    pub power: PowerParams,
    pub objective: ObjectiveParams,
    pub handover: HandoverParams,
    /// Shutdown decisions per episode.
    pub horizon: usize,
    pub scenario: ScenarioKind,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            rows: 4,
            cols: 3,
            inter_site_distance: 500.0,
            neighbor_count: 4,
            cell_radius: 250.0,
            n_ues: 40,
            demand_min: 0.01e9,
            demand_max: 0.1e9,
            radio: RadioConstants::default(),
            power: PowerParams::default(),
            objective: ObjectiveParams::default(),
            handover: HandoverParams::default(),
            horizon: 1,
            scenario: ScenarioKind::Uniform,
        }
    }
}

impl EnvConfig {
    /// Default network with the planted-empty layout and light demand
    /// (1 to 10 Mbit/s), where shutting the empty cell is the optimum.
    pub fn planted() -> Self {
        EnvConfig {
            scenario: ScenarioKind::PlantedEmpty,
            demand_min: 1e6,
            demand_max: 1e7,
            ..EnvConfig::default()
        }
    }

    pub fn n_cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.n_cells() < 2 {
            return Err(Error::config(
                "topology.rows",
                "grid must hold at least two cells",
            ));
        }
        positive("topology.inter_site_distance", self.inter_site_distance)?;
        if self.neighbor_count == 0 {
            return Err(Error::config("topology.neighbors", "must be at least 1"));
        }
        positive("topology.cell_radius", self.cell_radius)?;
        if self.n_ues == 0 {
            return Err(Error::config("traffic.ues", "must be at least 1"));
        }
        positive("traffic.demand_min", self.demand_min)?;
        if !(self.demand_max >= self.demand_min) || !self.demand_max.is_finite() {
            return Err(Error::config(
                "traffic.demand_max",
                "must be finite and >= demand_min",
            ));
        }
        self.radio.validate()?;
        self.power.validate()?;
        self.objective.validate()?;
        positive("handover.epsilon", self.handover.epsilon)?;
        if !self.handover.a3_offset_db.is_finite() {
            return Err(Error::config("handover.a3_offset_db", "must be finite"));
        }
        if self.horizon == 0 {
            return Err(Error::config("objective.horizon", "must be at least 1"));
        }
        if self.scenario == ScenarioKind::PlantedEmpty && self.n_ues + 1 < self.n_cells() {
            return Err(Error::config(
                "traffic.ues",
                "planted scenarios need at least one UE per non-planted cell",
            ));
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<NetworkLayout> {
        NetworkLayout::grid(
            self.rows,
            self.cols,
            self.inter_site_distance,
            self.neighbor_count,
        )
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

fn nonneg(key: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be >= 0, got {v}")))
    }
}
