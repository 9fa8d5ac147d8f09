//! Per-cell KPI CSV ingestion.
//!
//! Mandatory columns: `timestamp, cell_id, n_ues, prb_dl, tot_thp_dl`.
//! Optional: `tot_interference` (mW, default 0) and `active` (default
//! true). Rows sharing a timestamp form one snapshot; snapshots keep the
//! order in which their timestamps first appear. Cells absent from a
//! snapshot are treated as switched off.

use std::io::Read;
use std::path::Path;

use rand::Rng;

use crate::env::{CellLoad, EnvConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::topology::Point;
use crate::ScenarioState;

pub const MANDATORY_COLUMNS: [&str; 5] = ["timestamp", "cell_id", "n_ues", "prb_dl", "tot_thp_dl"];

#[derive(Debug, Clone, PartialEq)]
pub struct KpiRow {
    pub cell_id: usize,
    pub n_ues: usize,
    pub prb_dl: u32,
    pub tot_thp_dl: f64,
    pub tot_interference: f64,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiSnapshot {
    pub timestamp: String,
    /// Sorted by cell id.
    pub rows: Vec<KpiRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestOptions {
    /// Replace each cell's aggregate with `n_ues` equal-demand UEs near its
    /// site so shutdowns hand over individual UEs.
    pub synthesize_ues: bool,
    pub seed: u64,
}

pub fn read_kpi_csv(path: &Path) -> Result<Vec<KpiSnapshot>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_kpi_csv(file)
}

pub fn parse_kpi_csv<R: Read>(input: R) -> Result<Vec<KpiSnapshot>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(MANDATORY_COLUMNS) {
        *slot = col(name).ok_or_else(|| Error::Schema(format!("missing mandatory column `{name}`")))?;
    }
    let [i_ts, i_cell, i_n, i_prb, i_thp] = idx;
    let i_int = col("tot_interference");
    let i_act = col("active");

    let mut snapshots: Vec<KpiSnapshot> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Row {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| {
            record.get(i).ok_or_else(|| Error::Row {
                line,
                reason: format!("missing value for {name}"),
            })
        };
        let bad = |name: &str, v: &str| Error::Row {
            line,
            reason: format!("{name}: cannot parse `{v}`"),
        };
        let uint = |i: usize, name: &str| -> Result<u64> {
            let v = field(i, name)?;
            v.parse::<u64>().map_err(|_| bad(name, v))
        };
        let real = |i: usize, name: &str| -> Result<f64> {
            let v = field(i, name)?;
            match v.parse::<f64>() {
                Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
                _ => Err(bad(name, v)),
            }
        };
        let timestamp = field(i_ts, "timestamp")?.to_string();
        let prb_dl = uint(i_prb, "prb_dl")?;
        let row = KpiRow {
            cell_id: uint(i_cell, "cell_id")? as usize,
            n_ues: uint(i_n, "n_ues")? as usize,
            prb_dl: u32::try_from(prb_dl).map_err(|_| bad("prb_dl", field(i_prb, "prb_dl").unwrap_or("")))?,
            tot_thp_dl: real(i_thp, "tot_thp_dl")?,
            tot_interference: match i_int {
                Some(i) if !field(i, "tot_interference")?.is_empty() => real(i, "tot_interference")?,
                _ => 0.0,
            },
            active: match i_act {
                Some(i) => match field(i, "active")? {
                    "" | "1" | "true" | "TRUE" | "True" => true,
                    "0" | "false" | "FALSE" | "False" => false,
                    v => return Err(bad("active", v)),
                },
                None => true,
            },
        };
        let snap = match snapshots.iter_mut().position(|s| s.timestamp == timestamp) {
            Some(i) => &mut snapshots[i],
            None => {
                snapshots.push(KpiSnapshot {
                    timestamp,
                    rows: Vec::new(),
                });
                snapshots.last_mut().expect("just pushed")
            }
        };
        if snap.rows.iter().any(|r| r.cell_id == row.cell_id) {
            return Err(Error::Row {
                line,
                reason: format!("duplicate cell {} at {}", row.cell_id, snap.timestamp),
            });
        }
        snap.rows.push(row);
    }
    for s in &mut snapshots {
        s.rows.sort_by_key(|r| r.cell_id);
    }
    Ok(snapshots)
}

impl KpiSnapshot {
    /// Aggregate-mode state, or a UE-level one when synthesis is requested.
    pub fn to_state(&self, config: &EnvConfig, opts: IngestOptions, index: usize) -> Result<ScenarioState> {
        let k = config.n_cells();
        let mut loads = vec![
            CellLoad {
                n_ues: 0,
                prbs: 0,
                throughput: 0.0,
                interference: 0.0,
            };
            k
        ];
        let mut active = vec![false; k];
        for r in &self.rows {
            if r.cell_id >= k {
                return Err(Error::InvalidCell {
                    index: r.cell_id,
                    count: k,
                });
            }
            active[r.cell_id] = r.active;
            loads[r.cell_id] = CellLoad {
                n_ues: r.n_ues,
                prbs: r.prb_dl,
                throughput: r.tot_thp_dl,
                interference: r.tot_interference,
            };
        }
        let seed = derive_seed(opts.seed, &[index as u64]);
        if !opts.synthesize_ues {
            return ScenarioState::from_aggregates(config, loads, active, seed);
        }
        if active.iter().any(|a| !a) {
            return Err(Error::Schema(format!(
                "snapshot {}: UE synthesis needs every cell active",
                self.timestamp
            )));
        }
        let layout = config.layout()?;
        // within half the pitch of a site a UE is always admitted there
        let radius = config.cell_radius.min(0.45 * config.inter_site_distance);
        let mut rng = rng_from_seed(seed);
        let mut placements = Vec::new();
        for (cell, load) in loads.iter().enumerate() {
            let centre = layout.sites()[cell].position;
            let demand = if load.n_ues == 0 { 0.0 } else { load.throughput / load.n_ues as f64 };
            for _ in 0..load.n_ues {
                let r = radius * rng.gen::<f64>().sqrt();
                let theta = rng.gen::<f64>() * std::f64::consts::TAU;
                placements.push((
                    Point::new(centre.x + r * theta.cos(), centre.y + r * theta.sin()),
                    demand,
                ));
            }
        }
        ScenarioState::from_placements(config, placements, seed)
    }
}

pub fn ingest_kpi_csv(path: &Path, config: &EnvConfig, opts: IngestOptions) -> Result<Vec<ScenarioState>> {
    read_kpi_csv(path)?
        .iter()
        .enumerate()
        .map(|(i, s)| s.to_state(config, opts, i))
        .collect()
}
