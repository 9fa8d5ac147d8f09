//! Plain CSV exports of training curves and evaluation results.
//!
//! Floats are written with Rust's shortest round-trip formatting, so files
//! are byte-identical for identical runs and re-parse to the same values.

use std::path::{Path, PathBuf};

use crate::agents::CurvePoint;
use crate::error::{Error, Result};
use crate::oracle::PolicyEvaluation;

/// One method's artifacts from a train-and-evaluate run.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: String,
    pub curve: Vec<CurvePoint>,
    pub evaluation: PolicyEvaluation,
}

pub const TRAINING_CURVE: &str = "training_curve.csv";
pub const GAINS: &str = "gains.csv";
pub const EE_GAIN_PER_CELL: &str = "ee_gain_per_cell.csv";
pub const THROUGHPUT_CDF: &str = "throughput_cdf.csv";
pub const THP_VS_INTERFERENCE: &str = "thp_vs_interference.csv";
pub const SUMMARY: &str = "summary.csv";

/// Writes every CSV into `out_dir`, creating it if needed, and returns the
/// paths written.
pub fn export_metrics(runs: &[MethodRun], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
        let path = out_dir.join(name);
        write_csv(&path, header, &rows)?;
        written.push(path);
        Ok(())
    };

    let mut rows = Vec::new();
    for r in runs {
        for p in &r.curve {
            rows.push(vec![r.method.clone(), p.step.to_string(), num(p.mean_reward)]);
        }
    }
    emit(TRAINING_CURVE, &["method", "step", "mean_reward"], rows)?;

    let mut rows = Vec::new();
    for r in runs {
        for (i, rec) in r.evaluation.records.iter().enumerate() {
            let (g, p) = rec
                .outcome
                .as_ref()
                .map_or((String::new(), String::new()), |o| (num(o.g_perf), num(o.p_gain)));
            rows.push(vec![r.method.clone(), i.to_string(), rec.seed.to_string(), g, p]);
        }
    }
    emit(GAINS, &["method", "scenario", "seed", "g_perf", "p_gain"], rows)?;

    let mut rows = Vec::new();
    for r in runs {
        for (cell, gain) in ee_gain_per_cell(&r.evaluation) {
            rows.push(vec![cell.to_string(), r.method.clone(), num(gain)]);
        }
    }
    emit(EE_GAIN_PER_CELL, &["cell", "method", "ee_gain"], rows)?;

    let mut rows = Vec::new();
    for r in runs {
        for (thp, cdf) in throughput_cdf(&r.evaluation) {
            rows.push(vec![r.method.clone(), num(thp), num(cdf)]);
        }
    }
    emit(THROUGHPUT_CDF, &["method", "thp_bit_s", "cdf"], rows)?;

    let mut rows = Vec::new();
    for r in runs {
        for rec in &r.evaluation.records {
            for u in &rec.ue_points {
                rows.push(vec![r.method.clone(), num(u.interference), num(u.throughput)]);
            }
        }
    }
    emit(THP_VS_INTERFERENCE, &["method", "interference_mw", "thp_bit_s"], rows)?;

    let rows = runs
        .iter()
        .map(|r| {
            let e = &r.evaluation;
            vec![
                r.method.clone(),
                e.scenarios.to_string(),
                num(e.mean_policy),
                num(e.mean_oracle),
                num(e.regret),
                num(e.match_rate),
            ]
        })
        .collect();
    emit(
        SUMMARY,
        &["method", "scenarios", "mean_objective", "mean_oracle", "regret", "match_rate"],
        rows,
    )?;
    Ok(written)
}

/// Mean change of cell energy efficiency (bit/s per W) over the scenarios
/// where the cell survives the policy's shutdown.
pub fn ee_gain_per_cell(eval: &PolicyEvaluation) -> Vec<(usize, f64)> {
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for o in eval.records.iter().filter_map(|r| r.outcome.as_ref()) {
        if sums.len() < o.after.per_cell.len() {
            sums.resize(o.after.per_cell.len(), (0.0, 0));
        }
        for (a, b) in o.after.per_cell.iter().zip(&o.before.per_cell) {
            if a.active && b.active {
                sums[a.cell_id].0 += a.ee - b.ee;
                sums[a.cell_id].1 += 1;
            }
        }
    }
    sums.into_iter()
        .enumerate()
        .filter(|(_, (_, n))| *n > 0)
        .map(|(c, (s, n))| (c, s / n as f64))
        .collect()
}

/// Empirical CDF over pooled UE throughputs: one row per distinct value,
/// holding the fraction of samples at or below it.
pub fn throughput_cdf(eval: &PolicyEvaluation) -> Vec<(f64, f64)> {
    let mut xs: Vec<f64> = eval
        .records
        .iter()
        .flat_map(|r| r.ue_points.iter().map(|u| u.throughput))
        .collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        let cdf = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = cdf,
            _ => out.push((*x, cdf)),
        }
    }
    out
}

fn num(x: f64) -> String {
    x.to_string()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
