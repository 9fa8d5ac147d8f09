//! Cell and network accounting: power, energy efficiency, gains,
//! constraints and the shaped reward.

use std::fmt;

use super::config::{ObjectiveParams, PowerParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CellAggregates {
    pub cell_id: usize,
    pub active: bool,
    pub n_ues: usize,
    /// Mean UE throughput, bit/s. Zero for an empty cell.
    pub avg_thp: f64,
    pub tot_thp: f64,
    /// PRBs allocated to UEs (signalling floor excluded).
    pub tot_prbs: u32,
    pub tot_interference: f64,
    pub power_w: f64,
    /// Mean UE throughput per watt.
    pub ee: f64,
}

impl CellAggregates {
    pub fn inactive(cell_id: usize) -> Self {
        CellAggregates {
            cell_id,
            active: false,
            n_ues: 0,
            avg_thp: 0.0,
            tot_thp: 0.0,
            tot_prbs: 0,
            tot_interference: 0.0,
            power_w: 0.0,
            ee: 0.0,
        }
    }

    /// Builds an active cell record from raw sums.
    pub fn from_totals(
        cell_id: usize,
        n_ues: usize,
        tot_thp: f64,
        tot_prbs: u32,
        tot_interference: f64,
        pp: &PowerParams,
    ) -> Self {
        let avg_thp = if n_ues == 0 { 0.0 } else { tot_thp / n_ues as f64 };
        let power_w = cell_power(tot_prbs + pp.prb_floor, pp, true);
        CellAggregates {
            cell_id,
            active: true,
            n_ues,
            avg_thp,
            tot_thp,
            tot_prbs,
            tot_interference,
            power_w,
            ee: avg_thp / power_w,
        }
    }
}

/// Power drawn by a cell carrying `load_prbs` PRBs.
pub fn cell_power(load_prbs: u32, pp: &PowerParams, active: bool) -> f64 {
    if !active {
        return 0.0;
    }
    pp.p_idle_w + f64::from(load_prbs) * pp.p_prb_w / pp.eta
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSummary {
    /// Mean power over active cells, W.
    pub p_avrg: f64,
    /// Mean total cell throughput over active cells, bit/s.
    pub r_avrg: f64,
    /// Mean UE PRBs over active cells.
    pub prb_avg: f64,
    pub ee_total: f64,
    /// Interference summed over every UE in the network, mW.
    pub tot_interference: f64,
    pub per_cell: Vec<CellAggregates>,
}

impl NetworkSummary {
    pub fn from_cells(per_cell: Vec<CellAggregates>) -> Result<Self> {
        let active: Vec<&CellAggregates> = per_cell.iter().filter(|c| c.active).collect();
        if active.is_empty() {
            return Err(Error::NoActiveCells);
        }
        let n = active.len() as f64;
        let p_avrg = active.iter().map(|c| c.power_w).sum::<f64>() / n;
        let r_avrg = active.iter().map(|c| c.tot_thp).sum::<f64>() / n;
        let prb_avg = active.iter().map(|c| f64::from(c.tot_prbs)).sum::<f64>() / n;
        let tot_interference = per_cell.iter().map(|c| c.tot_interference).sum();
        Ok(NetworkSummary {
            p_avrg,
            r_avrg,
            prb_avg,
            ee_total: r_avrg / p_avrg,
            tot_interference,
            per_cell,
        })
    }

    pub fn active_count(&self) -> usize {
        self.per_cell.iter().filter(|c| c.active).count()
    }
}

/// Mean relative change of per-cell average throughput over the cells
/// still active after the shutdown.
pub fn performance_gain(before: &NetworkSummary, after: &NetworkSummary, smoothing: f64) -> f64 {
    let gains: Vec<f64> = after
        .per_cell
        .iter()
        .filter(|c| c.active)
        .map(|a| {
            let b = &before.per_cell[a.cell_id];
            (a.avg_thp - b.avg_thp) / (b.avg_thp + smoothing)
        })
        .collect();
    if gains.is_empty() {
        0.0
    } else {
        gains.iter().sum::<f64>() / gains.len() as f64
    }
}

/// Drop in mean cell power, normalized by `p_max`.
pub fn power_gain(before: &NetworkSummary, after: &NetworkSummary, p_max: f64) -> f64 {
    (before.p_avrg - after.p_avrg) / p_max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Violation {
    ThroughputDegradation,
    PrbIncrease,
    InterferenceExceeded,
}

impl Violation {
    pub const ALL: [Violation; 3] = [
        Violation::ThroughputDegradation,
        Violation::PrbIncrease,
        Violation::InterferenceExceeded,
    ];

    fn bit(self) -> u8 {
        match self {
            Violation::ThroughputDegradation => 1,
            Violation::PrbIncrease => 2,
            Violation::InterferenceExceeded => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Violation::ThroughputDegradation => "throughput",
            Violation::PrbIncrease => "prb",
            Violation::InterferenceExceeded => "interference",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ViolationSet(u8);

impl ViolationSet {
    pub fn insert(&mut self, v: Violation) {
        self.0 |= v.bit();
    }

    pub fn contains(self, v: Violation) -> bool {
        self.0 & v.bit() != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Violation> {
        Violation::ALL.into_iter().filter(move |v| self.contains(*v))
    }
}

impl FromIterator<Violation> for ViolationSet {
    fn from_iter<I: IntoIterator<Item = Violation>>(iter: I) -> Self {
        let mut set = ViolationSet::default();
        for v in iter {
            set.insert(v);
        }
        set
    }
}

impl fmt::Display for ViolationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        let names: Vec<&str> = self.iter().map(Violation::name).collect();
        f.write_str(&names.join("|"))
    }
}

/// Checks the throughput, PRB and interference constraints of a shutdown.
pub fn evaluate_constraints(
    before: &NetworkSummary,
    after: &NetworkSummary,
    delta: f64,
    interference_factor: f64,
) -> ViolationSet {
    let mut set = ViolationSet::default();
    if after.r_avrg < delta * before.r_avrg {
        set.insert(Violation::ThroughputDegradation);
    }
    if after.prb_avg > before.prb_avg {
        set.insert(Violation::PrbIncrease);
    }
    if after.tot_interference > interference_factor * before.tot_interference {
        set.insert(Violation::InterferenceExceeded);
    }
    set
}

/// Weighted objective minus a linear penalty per violated constraint.
pub fn reward(g_perf: f64, p_gain: f64, violations: ViolationSet, obj: &ObjectiveParams) -> f64 {
    obj.w_perf * g_perf + obj.w_power * p_gain - obj.penalty * violations.len() as f64
}

/// One UE moved off a shut cell.
#[derive(Debug, Clone, PartialEq)]
pub struct HandoverRecord {
    pub ue_id: usize,
    pub from: usize,
    pub to: usize,
    /// Candidate with the highest RSRP at the UE, i.e. the cell an A3
    /// event would nominate.
    pub a3_best: usize,
    /// RSRP of the target exceeds the shut cell's RSRP by the A3 offset.
    /// A switched-off cell radiates nothing, so this is the pre-shutdown
    /// comparison kept as a diagnostic only.
    pub a3_margin_met: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShutdownOutcome {
    pub shut_cell: usize,
    pub before: NetworkSummary,
    pub after: NetworkSummary,
    pub g_perf: f64,
    pub p_gain: f64,
    pub violations: ViolationSet,
    pub reward: f64,
    pub handovers: Vec<HandoverRecord>,
    /// UEs dropped because redistribution was disabled.
    pub dropped_ues: usize,
}

impl ShutdownOutcome {
    pub fn score(
        shut_cell: usize,
        before: NetworkSummary,
        after: NetworkSummary,
        obj: &ObjectiveParams,
        p_max: f64,
    ) -> Self {
        let g_perf = performance_gain(&before, &after, obj.gain_smoothing);
        let p_gain = power_gain(&before, &after, p_max);
        let violations = evaluate_constraints(&before, &after, obj.delta, obj.interference_factor);
        let reward = reward(g_perf, p_gain, violations, obj);
        ShutdownOutcome {
            shut_cell,
            before,
            after,
            g_perf,
            p_gain,
            violations,
            reward,
            handovers: Vec::new(),
            dropped_ues: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp() -> PowerParams {
        PowerParams {
            prb_floor: 0,
            ..PowerParams::default()
        }
    }

    fn cell(id: usize, n: usize, thp: f64, prbs: u32, p: &PowerParams) -> CellAggregates {
        CellAggregates::from_totals(id, n, thp, prbs, 0.0, p)
    }

    fn summary(cells: Vec<CellAggregates>) -> NetworkSummary {
        NetworkSummary::from_cells(cells).unwrap()
    }

    #[test]
    fn power_examples() {
        let p = PowerParams::default();
        assert_eq!(cell_power(0, &p, true), 100.0);
        assert_eq!(cell_power(50, &p, false), 0.0);
        let q = PowerParams {
            p_idle_w: 100.0,
            p_prb_w: 0.4,
            eta: 0.3,
            ..p
        };
        // 100 + 100 * 0.4 / 0.3
        assert!((cell_power(100, &q, true) - 233.333_333_333_333_34).abs() < 1e-9);
    }

    #[test]
    fn aggregate_examples() {
        let p = pp();
        let one = cell(0, 1, 5e6, 3, &p);
        assert_eq!(one.avg_thp, 5e6);
        assert_eq!(one.tot_thp, 5e6);
        let empty = cell(1, 0, 0.0, 0, &p);
        assert_eq!(empty.avg_thp, 0.0);
        assert_eq!(empty.power_w, p.p_idle_w);
        let off = CellAggregates::inactive(2);
        assert_eq!((off.n_ues, off.tot_prbs, off.power_w), (0, 0, 0.0));
    }

    #[test]
    fn floor_prbs_enter_power_only() {
        let p = PowerParams::default();
        let c = cell(0, 3, 3e6, 60, &p);
        assert_eq!(c.tot_prbs, 60);
        assert_eq!(c.power_w, cell_power(70, &p, true));
    }

    #[test]
    fn summary_averages_active_cells() {
        let p = pp();
        let cells = vec![
            cell(0, 1, 1e6, 10, &p),
            cell(1, 1, 1e6, 10, &p),
            CellAggregates::inactive(2),
        ];
        let s = summary(cells);
        assert_eq!(s.p_avrg, cell_power(10, &p, true));
        assert_eq!(s.r_avrg, 1e6);
        assert_eq!(s.prb_avg, 10.0);
        assert!((s.ee_total * s.p_avrg - s.r_avrg).abs() <= 1e-12 * s.r_avrg);
        assert!(matches!(
            NetworkSummary::from_cells(vec![CellAggregates::inactive(0)]),
            Err(Error::NoActiveCells)
        ));
    }

    #[test]
    fn performance_gain_examples() {
        let p = pp();
        let before: Vec<_> = (0..12).map(|i| cell(i, 1, 10e6, 10, &p)).collect();
        let mut after = before.clone();
        after[0] = CellAggregates::inactive(0);
        let b = summary(before.clone());
        assert_eq!(performance_gain(&b, &summary(after.clone()), 1.0), 0.0);

        after[1] = cell(1, 1, 11e6, 10, &p);
        let g = performance_gain(&b, &summary(after.clone()), 1e-300);
        assert!((g - 0.1 / 11.0).abs() < 1e-12, "{g}");
        assert!(g > 0.0);

        after[1] = cell(1, 1, 9e6, 10, &p);
        assert!(performance_gain(&b, &summary(after), 1.0) < 0.0);
    }

    #[test]
    fn power_gain_examples() {
        let p = pp();
        let before: Vec<_> = (0..4).map(|i| cell(i, 0, 0.0, 0, &p)).collect();
        let mut after = before.clone();
        after[2] = CellAggregates::inactive(2);
        assert_eq!(power_gain(&summary(before), &summary(after), 40.0), 0.0);

        let mut before: Vec<_> = (0..4).map(|i| cell(i, 0, 0.0, 0, &p)).collect();
        before[3] = cell(3, 2, 2e6, 50, &p);
        let mut after = before.clone();
        after[3] = CellAggregates::inactive(3);
        assert!(power_gain(&summary(before), &summary(after), 40.0) > 0.0);
    }

    #[test]
    fn constraint_examples() {
        let p = pp();
        let s = summary(vec![cell(0, 1, 1e7, 10, &p), cell(1, 1, 1e7, 10, &p)]);
        assert!(evaluate_constraints(&s, &s, 0.9, 1.0).is_empty());
        assert!(evaluate_constraints(&s, &s, 1.0, 1.0).is_empty());

        let worse = summary(vec![cell(0, 1, 0.8e7, 10, &p), cell(1, 1, 0.8e7, 10, &p)]);
        let v = evaluate_constraints(&s, &worse, 0.9, 1.1);
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![Violation::ThroughputDegradation]);

        let more_prbs = summary(vec![cell(0, 1, 1e7, 11, &p), cell(1, 1, 1e7, 10, &p)]);
        assert!(evaluate_constraints(&s, &more_prbs, 0.9, 1.1).contains(Violation::PrbIncrease));
    }

    #[test]
    fn reward_examples() {
        let obj = ObjectiveParams::default();
        let r = reward(0.05, 0.10, ViolationSet::default(), &obj);
        assert!((r - 0.08).abs() < 1e-15);
        assert_eq!(reward(0.0, 0.0, ViolationSet::default(), &obj), 0.0);
        let one: ViolationSet = [Violation::PrbIncrease].into_iter().collect();
        assert!((reward(0.05, 0.10, one, &obj) - (0.08 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn violation_set_display() {
        let set: ViolationSet = [Violation::InterferenceExceeded, Violation::ThroughputDegradation]
            .into_iter()
            .collect();
        assert_eq!(set.to_string(), "throughput|interference");
        assert_eq!(set.len(), 2);
        assert_eq!(ViolationSet::default().to_string(), "-");
    }
}
