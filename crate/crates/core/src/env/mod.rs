//! The cell-shutdown simulation: UE placement and admission, per-cell
//! accounting, shutdown with handover, and a step/reset episode API.

mod allocation;
mod config;
mod handover;
mod metrics;

use rand::Rng;

pub use allocation::{allocate_prbs, Allocation};
pub use config::{
    EnvConfig, HandoverParams, HandoverWeighting, ObjectiveParams, PowerParams, ScenarioKind,
};
pub use handover::{multinomial, proximity_weight, Candidate};
pub use metrics::{
    cell_power, evaluate_constraints, performance_gain, power_gain, reward, CellAggregates,
    HandoverRecord, NetworkSummary, ShutdownOutcome, Violation, ViolationSet,
};

use crate::error::{Error, Result};
use crate::radio;
use crate::rng::{derive_seed, rng_from_seed, SimRng};
use crate::topology::{NetworkLayout, Point};

/// Features per cell in the observation vector.
pub const FEATURES_PER_CELL: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct UeSession {
    pub ue_id: usize,
    pub position: Point,
    /// Requested throughput, bit/s.
    pub demand: f64,
    pub serving_cell: usize,
    pub rsrp_dbm: f64,
    pub sinr: f64,
    /// PRBs needed to meet the demand.
    pub prbs_demanded: u32,
    /// PRBs granted after the capacity rule.
    pub prbs: u32,
    pub throughput: f64,
    /// Interference from active neighbors of the serving cell, mW.
    pub interference: f64,
}

/// Per-cell load taken as given, for scenarios without UE geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLoad {
    pub n_ues: usize,
    pub prbs: u32,
    pub throughput: f64,
    pub interference: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Population {
    Ues(Vec<UeSession>),
    Aggregate(Vec<CellLoad>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// `None` when the action was invalid.
    pub outcome: Option<ShutdownOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioState {
    config: EnvConfig,
    layout: NetworkLayout,
    population: Population,
    active: Vec<bool>,
    overloaded: Vec<bool>,
    cells: Vec<CellAggregates>,
    power_total: f64,
    seed: u64,
    step_count: usize,
    total_ues: usize,
    interference_scale: f64,
}

impl ScenarioState {
    /// Places UEs at random according to the configured scenario kind and
    /// admits each to its strongest cell.
    pub fn reset(config: &EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = config.layout()?;
        let mut rng = rng_from_seed(seed);
        let placements = match config.scenario {
            ScenarioKind::Uniform => {
                let mut out = Vec::with_capacity(config.n_ues);
                for _ in 0..config.n_ues {
                    let site = rng.gen_range(0..layout.len());
                    out.push(place_ue(&layout, site, config, &mut rng));
                }
                out
            }
            ScenarioKind::PlantedEmpty => planted_placements(&layout, config, &mut rng)?,
        };
        Self::from_placements(config, placements, seed)
    }

    /// Builds a state from explicit `(position, demand)` pairs, all cells
    /// active. UE ids follow input order.
    pub fn from_placements(
        config: &EnvConfig,
        placements: Vec<(Point, f64)>,
        seed: u64,
    ) -> Result<Self> {
        let layout = config.layout()?;
        let active = vec![true; layout.len()];
        let mut ues = Vec::with_capacity(placements.len());
        for (ue_id, (position, demand)) in placements.into_iter().enumerate() {
            if !(demand >= 0.0) || !demand.is_finite() {
                return Err(Error::config("traffic.demand", format!("UE {ue_id}: bad demand {demand}")));
            }
            let serving_cell = admit(&layout, &active, position, &config.radio)?;
            ues.push(UeSession {
                ue_id,
                position,
                demand,
                serving_cell,
                rsrp_dbm: 0.0,
                sinr: 0.0,
                prbs_demanded: 0,
                prbs: 0,
                throughput: 0.0,
                interference: 0.0,
            });
        }
        let total_ues = ues.len();
        Self::assemble(config, layout, Population::Ues(ues), active, seed, total_ues)
    }

    /// Builds a state from per-cell loads taken as given.
    pub fn from_aggregates(
        config: &EnvConfig,
        loads: Vec<CellLoad>,
        active: Vec<bool>,
        seed: u64,
    ) -> Result<Self> {
        let layout = config.layout()?;
        if loads.len() != layout.len() || active.len() != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: layout.len(),
                found: loads.len().min(active.len()),
            });
        }
        if !active.iter().any(|&a| a) {
            return Err(Error::NoActiveCells);
        }
        let total_ues = loads
            .iter()
            .zip(&active)
            .filter(|(_, &a)| a)
            .map(|(l, _)| l.n_ues)
            .sum();
        Self::assemble(config, layout, Population::Aggregate(loads), active, seed, total_ues)
    }

    fn assemble(
        config: &EnvConfig,
        layout: NetworkLayout,
        population: Population,
        active: Vec<bool>,
        seed: u64,
        total_ues: usize,
    ) -> Result<Self> {
        let k = layout.len();
        let mut state = ScenarioState {
            config: config.clone(),
            layout,
            population,
            active,
            overloaded: vec![false; k],
            cells: (0..k).map(CellAggregates::inactive).collect(),
            power_total: 0.0,
            seed,
            step_count: 0,
            total_ues,
            interference_scale: 0.0,
        };
        state.refresh()?;
        Ok(state)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn layout(&self) -> &NetworkLayout {
        &self.layout
    }

    pub fn n_cells(&self) -> usize {
        self.layout.len()
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn overloaded(&self) -> &[bool] {
        &self.overloaded
    }

    /// UE sessions; empty for aggregate-mode scenarios.
    pub fn ues(&self) -> &[UeSession] {
        match &self.population {
            Population::Ues(ues) => ues,
            Population::Aggregate(_) => &[],
        }
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(self.population, Population::Aggregate(_))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    /// Total UEs at construction, used to normalize observations.
    pub fn total_ues(&self) -> usize {
        self.total_ues
    }

    /// Strongest active cell at `position`; ties go to the lower id.
    pub fn admit_ue(&self, position: Point) -> Result<usize> {
        admit(&self.layout, &self.active, position, &self.config.radio)
    }

    pub fn cell_aggregates(&self, cell: usize) -> Result<CellAggregates> {
        self.layout.site(cell)?;
        Ok(self.cells[cell].clone())
    }

    pub fn network_summary(&self) -> Result<NetworkSummary> {
        NetworkSummary::from_cells(self.cells.clone())
    }

    /// Sum of cell powers, maintained incrementally across refreshes.
    pub fn power_total(&self) -> f64 {
        self.power_total
    }

    /// Handover probabilities for the UEs of `shut`, over its active
    /// neighbors (or over every other active cell when none is active).
    pub fn handover_weights(&self, shut: usize) -> Result<Vec<(usize, f64)>> {
        self.layout.site(shut)?;
        if !self.active[shut] {
            return Err(Error::IllegalAction(format!("cell {shut} is not active")));
        }
        let candidate = |cell: usize| Candidate {
            cell,
            position: self.layout.sites()[cell].position,
            used_prbs: self.cells[cell].tot_prbs,
        };
        let mut candidates: Vec<Candidate> = self
            .layout
            .neighbors(shut)?
            .iter()
            .copied()
            .filter(|&n| self.active[n])
            .map(candidate)
            .collect();
        if candidates.is_empty() {
            candidates = (0..self.n_cells())
                .filter(|&c| c != shut && self.active[c])
                .map(candidate)
                .collect();
            if candidates.is_empty() {
                return Err(Error::IllegalAction(format!(
                    "cell {shut} is the last active cell"
                )));
            }
            // proximity alone when falling back to the whole network
            for c in &mut candidates {
                c.used_prbs = 0;
            }
        }
        candidates.sort_by_key(|c| c.cell);
        Ok(handover::weights(
            self.layout.sites()[shut].position,
            &candidates,
            self.config.handover.epsilon,
            self.config.handover.weighting,
            self.config.power.user_capacity(),
        ))
    }

    /// Switches `shut` off and moves its UEs to the handover candidates.
    ///
    /// Counts per candidate are drawn from a multinomial over the handover
    /// weights; UEs are then assigned in id order, candidates in id order.
    pub fn redistribute_ues<R: Rng + ?Sized>(
        &mut self,
        shut: usize,
        rng: &mut R,
    ) -> Result<(Vec<HandoverRecord>, usize)> {
        if self.active_count() < 2 {
            return Err(Error::IllegalAction(format!(
                "cell {shut} is the last active cell"
            )));
        }
        let weights = self.handover_weights(shut)?;
        let redistribute = self.config.handover.redistribute;
        let pre_active = self.active.clone();
        self.active[shut] = false;

        let probs: Vec<f64> = weights.iter().map(|w| w.1).collect();
        let mut records = Vec::new();
        let mut dropped = 0;
        match &mut self.population {
            Population::Ues(ues) => {
                let moving: Vec<usize> = ues
                    .iter()
                    .enumerate()
                    .filter(|(_, u)| u.serving_cell == shut)
                    .map(|(i, _)| i)
                    .collect();
                if !redistribute {
                    dropped = moving.len();
                    ues.retain(|u| u.serving_cell != shut);
                } else {
                    let counts = multinomial(moving.len(), &probs, rng);
                    let targets = weights
                        .iter()
                        .zip(&counts)
                        .flat_map(|(&(cell, _), &n)| std::iter::repeat(cell).take(n));
                    let rc = &self.config.radio;
                    for (idx, to) in moving.into_iter().zip(targets) {
                        let ue = &mut ues[idx];
                        let rsrp_of =
                            |c: usize| radio::rsrp(&self.layout, c, ue.position, rc).unwrap_or(f64::NEG_INFINITY);
                        let a3_best = weights
                            .iter()
                            .map(|w| w.0)
                            .fold(None::<(usize, f64)>, |best, c| {
                                let p = rsrp_of(c);
                                match best {
                                    Some((_, bp)) if bp >= p => best,
                                    _ => Some((c, p)),
                                }
                            })
                            .map(|b| b.0)
                            .unwrap_or(to);
                        records.push(HandoverRecord {
                            ue_id: ue.ue_id,
                            from: shut,
                            to,
                            a3_best,
                            a3_margin_met: rsrp_of(to)
                                > rsrp_of(shut) + self.config.handover.a3_offset_db,
                        });
                        ue.serving_cell = to;
                    }
                }
            }
            Population::Aggregate(loads) => {
                let taken = std::mem::replace(
                    &mut loads[shut],
                    CellLoad {
                        n_ues: 0,
                        prbs: 0,
                        throughput: 0.0,
                        interference: 0.0,
                    },
                );
                if !redistribute {
                    dropped = taken.n_ues;
                } else if taken.n_ues > 0 {
                    let counts = multinomial(taken.n_ues, &probs, rng);
                    let n = taken.n_ues as f64;
                    let (base, extra) = (taken.prbs / taken.n_ues as u32, taken.prbs % taken.n_ues as u32);
                    let mut ue_index = 0u32;
                    for (&(cell, _), &c) in weights.iter().zip(&counts) {
                        let target = &mut loads[cell];
                        for _ in 0..c {
                            target.prbs += base + u32::from(ue_index < extra);
                            ue_index += 1;
                        }
                        target.n_ues += c;
                        target.throughput += taken.throughput * c as f64 / n;
                        target.interference += taken.interference * c as f64 / n;
                    }
                }
            }
        }
        debug_assert!(pre_active[shut]);
        self.refresh()?;
        Ok((records, dropped))
    }

    /// Seed of the handover draw when `cell` is shut at the current step.
    pub fn shutdown_seed(&self, cell: usize) -> u64 {
        derive_seed(self.seed, &[0x5_407, self.step_count as u64, cell as u64])
    }

    /// Shuts `cell` using the handover stream derived from the scenario
    /// seed, the step index and the cell id.
    pub fn apply_shutdown(&mut self, cell: usize) -> Result<ShutdownOutcome> {
        let mut rng: SimRng = rng_from_seed(self.shutdown_seed(cell));
        self.apply_shutdown_with(cell, &mut rng)
    }

    pub fn apply_shutdown_with<R: Rng + ?Sized>(
        &mut self,
        cell: usize,
        rng: &mut R,
    ) -> Result<ShutdownOutcome> {
        self.layout.site(cell)?;
        if !self.active[cell] {
            return Err(Error::IllegalAction(format!("cell {cell} is already off")));
        }
        if self.active_count() < 2 {
            return Err(Error::IllegalAction(format!(
                "cell {cell} is the last active cell"
            )));
        }
        let before = self.network_summary()?;
        let (handovers, dropped) = self.redistribute_ues(cell, rng)?;
        let after = self.network_summary()?;
        let mut outcome = ShutdownOutcome::score(
            cell,
            before,
            after,
            &self.config.objective,
            self.config.power.p_max_w,
        );
        outcome.handovers = handovers;
        outcome.dropped_ues = dropped;
        Ok(outcome)
    }

    /// Fixed-length observation: per cell, UE share, PRB utilization,
    /// normalized mean throughput, normalized interference and the active
    /// flag. Inactive cells are all zero.
    pub fn observe(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(self.n_cells() * FEATURES_PER_CELL);
        let ue_norm = if self.total_ues == 0 { 0.0 } else { 1.0 / self.total_ues as f64 };
        let int_norm = if self.interference_scale > 0.0 {
            1.0 / self.interference_scale
        } else {
            0.0
        };
        for c in &self.cells {
            if !c.active {
                obs.extend([0.0; FEATURES_PER_CELL]);
                continue;
            }
            obs.extend([
                c.n_ues as f64 * ue_norm,
                f64::from(c.tot_prbs) / f64::from(self.config.power.prb_capacity),
                c.avg_thp / self.config.demand_max,
                c.tot_interference * int_norm,
                1.0,
            ]);
        }
        obs
    }

    pub fn observation_len(&self) -> usize {
        self.n_cells() * FEATURES_PER_CELL
    }

    pub fn is_done(&self) -> bool {
        self.step_count >= self.config.horizon || self.active_count() < 2
    }

    /// Whether `action` names a cell that can legally be shut now.
    pub fn is_valid_action(&self, action: usize) -> bool {
        action < self.n_cells() && self.active[action] && self.active_count() >= 2
    }

    /// Advances one decision. Invalid actions cost the penalty and leave
    /// the network untouched.
    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        let (reward, outcome) = if self.is_valid_action(action) {
            let outcome = self.apply_shutdown(action)?;
            (outcome.reward, Some(outcome))
        } else {
            (-self.config.objective.penalty, None)
        };
        self.step_count += 1;
        Ok(StepResult {
            observation: self.observe(),
            reward,
            done: self.is_done(),
            outcome,
        })
    }

    /// Recomputes radio quality, allocations and aggregates for every cell.
    fn refresh(&mut self) -> Result<()> {
        let k = self.n_cells();
        let pp = self.config.power.clone();
        let rc = &self.config.radio;
        let mut cells: Vec<CellAggregates> = (0..k).map(CellAggregates::inactive).collect();
        let mut overloaded = vec![false; k];
        match &mut self.population {
            Population::Ues(ues) => {
                let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
                for (i, ue) in ues.iter_mut().enumerate() {
                    debug_assert!(self.active[ue.serving_cell]);
                    ue.rsrp_dbm = radio::rsrp(&self.layout, ue.serving_cell, ue.position, rc)?;
                    ue.interference = radio::interference(
                        &self.layout,
                        ue.serving_cell,
                        ue.position,
                        &self.active,
                        rc,
                    )?;
                    ue.sinr = radio::sinr(ue.rsrp_dbm, ue.interference, rc);
                    ue.prbs_demanded = radio::prb_demand(ue.demand, ue.sinr, rc)?;
                    members[ue.serving_cell].push(i);
                }
                for cell in (0..k).filter(|&c| self.active[c]) {
                    let idx = &members[cell];
                    let demands: Vec<u32> = idx.iter().map(|&i| ues[i].prbs_demanded).collect();
                    let alloc = allocate_prbs(&demands, pp.user_capacity());
                    overloaded[cell] = alloc.overloaded;
                    let (mut thp, mut prbs, mut int) = (0.0, 0u32, 0.0);
                    for (&i, &p) in idx.iter().zip(&alloc.prbs) {
                        let ue = &mut ues[i];
                        ue.prbs = p;
                        ue.throughput = radio::shannon_throughput(p, ue.sinr, rc);
                        thp += ue.throughput;
                        prbs += p;
                        int += ue.interference;
                    }
                    cells[cell] = CellAggregates::from_totals(cell, idx.len(), thp, prbs, int, &pp);
                }
            }
            Population::Aggregate(loads) => {
                let cap = pp.user_capacity();
                for cell in (0..k).filter(|&c| self.active[c]) {
                    let load = &mut loads[cell];
                    if load.prbs > cap {
                        load.throughput *= f64::from(cap) / f64::from(load.prbs);
                        load.prbs = cap;
                        overloaded[cell] = true;
                    }
                    cells[cell] = CellAggregates::from_totals(
                        cell,
                        load.n_ues,
                        load.throughput,
                        load.prbs,
                        load.interference,
                        &pp,
                    );
                }
            }
        }
        for (old, new) in self.cells.iter().zip(&cells) {
            self.power_total += new.power_w - old.power_w;
        }
        let observed_max = cells
            .iter()
            .map(|c| c.tot_interference)
            .fold(0.0, f64::max);
        self.interference_scale = self.interference_scale.max(observed_max);
        self.cells = cells;
        self.overloaded = overloaded;
        Ok(())
    }
}

fn admit(
    layout: &NetworkLayout,
    active: &[bool],
    position: Point,
    rc: &radio::RadioConstants,
) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for cell in (0..layout.len()).filter(|&c| active[c]) {
        let p = radio::rsrp(layout, cell, position, rc)?;
        if best.map_or(true, |(_, bp)| p > bp) {
            best = Some((cell, p));
        }
    }
    best.map(|b| b.0).ok_or(Error::NoCoverage)
}

fn place_ue<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    site: usize,
    config: &EnvConfig,
    rng: &mut R,
) -> (Point, f64) {
    let centre = layout.sites()[site].position;
    let r = config.cell_radius * rng.gen::<f64>().sqrt();
    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    let demand = if config.demand_max > config.demand_min {
        rng.gen_range(config.demand_min..=config.demand_max)
    } else {
        config.demand_min
    };
    (
        Point::new(centre.x + r * theta.cos(), centre.y + r * theta.sin()),
        demand,
    )
}

/// One cell left empty. Cells that count it among their interferers
/// ("border" cells) take the bulk of the UEs, placed on the segment towards
/// the planted site at 30-45% of the way with a small lateral offset, so
/// the planted cell is their dominant interferer. Every other cell gets at
/// least one UE in its disc. Samples admitted to the wrong cell are redrawn.
fn planted_placements<R: Rng + ?Sized>(
    layout: &NetworkLayout,
    config: &EnvConfig,
    rng: &mut R,
) -> Result<Vec<(Point, f64)>> {
    let k = layout.len();
    let planted = rng.gen_range(0..k);
    let all_active = vec![true; k];
    let mut border = Vec::new();
    let mut others = Vec::new();
    for c in (0..k).filter(|&c| c != planted) {
        if layout.neighbors(c)?.contains(&planted) {
            border.push(c);
        } else {
            others.push(c);
        }
    }
    if border.is_empty() {
        std::mem::swap(&mut border, &mut others);
    }
    let target = layout.sites()[planted].position;
    let mut out = Vec::with_capacity(config.n_ues);
    let seeded: Vec<usize> = others.iter().chain(&border).copied().collect();
    for i in 0..config.n_ues {
        let site = if i < seeded.len() {
            seeded[i]
        } else {
            border[rng.gen_range(0..border.len())]
        };
        for attempt in 0.. {
            let (mut p, d) = place_ue(layout, site, config, rng);
            // a far planted neighbor can put the whole segment in another
            // cell; fall back to the disc after a few tries
            if border.contains(&site) && attempt < 32 {
                let c = layout.sites()[site].position;
                let (dx, dy) = (target.x - c.x, target.y - c.y);
                let f = rng.gen_range(0.3..0.45);
                let lateral = rng.gen_range(-0.1..0.1);
                p = Point::new(c.x + f * dx - lateral * dy, c.y + f * dy + lateral * dx);
            }
            if admit(layout, &all_active, p, &config.radio)? == site {
                out.push((p, d));
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
