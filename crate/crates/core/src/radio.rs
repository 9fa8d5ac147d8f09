//! Per-link physics: UMa pathloss, RSRP, interference, SINR, Shannon rate
//! and PRB demand.

use crate::error::{Error, Result};
use crate::topology::{NetworkLayout, Point};

/// Default receiver noise figure in dB.
pub const NOISE_FIGURE_DB: f64 = 9.0;
/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RadioConstants {
    /// Base-station transmit power, dBm.
    pub ptx_dbm: f64,
    pub carrier_ghz: f64,
    /// Base-station antenna height, m.
    pub h_bs: f64,
    /// UE antenna height, m.
    pub h_ut: f64,
    pub prb_bandwidth_hz: f64,
    pub noise_dbm: f64,
    /// Weight applied to every neighbor's received power in the interference sum.
    pub interference_alpha: f64,
}

impl Default for RadioConstants {
    fn default() -> Self {
        let prb_bandwidth_hz = 360e3;
        RadioConstants {
            ptx_dbm: 46.0,
            carrier_ghz: 3.5,
            h_bs: 25.0,
            h_ut: 1.5,
            prb_bandwidth_hz,
            noise_dbm: thermal_noise_dbm(prb_bandwidth_hz, NOISE_FIGURE_DB),
            interference_alpha: 1.0,
        }
    }
}

impl RadioConstants {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("radio.ptx_dbm", self.ptx_dbm),
            ("radio.h_bs", self.h_bs),
            ("radio.h_ut", self.h_ut),
            ("radio.noise_dbm", self.noise_dbm),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        if !(self.prb_bandwidth_hz > 0.0) || !self.prb_bandwidth_hz.is_finite() {
            return Err(Error::config("radio.prb_bandwidth_hz", "must be positive"));
        }
        if !(self.carrier_ghz > 0.0) || !self.carrier_ghz.is_finite() {
            return Err(Error::config("radio.carrier_ghz", "must be positive"));
        }
        if !(self.interference_alpha >= 0.0) || !self.interference_alpha.is_finite() {
            return Err(Error::config("radio.interference_alpha", "must be >= 0"));
        }
        Ok(())
    }

    /// Noise power in linear mW.
    pub fn noise_mw(&self) -> f64 {
        dbm_to_mw(self.noise_dbm)
    }

    /// Shannon rate carried by a single PRB at the given SINR, bit/s.
    pub fn rate_per_prb(&self, sinr: f64) -> f64 {
        self.prb_bandwidth_hz * (1.0 + sinr).log2()
    }
}

/// Thermal noise over `bandwidth_hz` plus a receiver noise figure, dBm.
pub fn thermal_noise_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// 3GPP UMa NLOS pathloss in dB. Distances under 1 m are clamped to 1 m.
pub fn pathloss_uma(d2d: f64, rc: &RadioConstants) -> f64 {
    let d2d = d2d.max(1.0);
    let dh = rc.h_bs - rc.h_ut;
    let d3d = (d2d * d2d + dh * dh).sqrt();
    13.54 + 39.08 * d3d.log10() + 20.0 * rc.carrier_ghz.log10() - 0.6 * (rc.h_ut - 1.5)
}

/// Received reference power from `cell` at `ue`, dBm.
pub fn rsrp(layout: &NetworkLayout, cell: usize, ue: Point, rc: &RadioConstants) -> Result<f64> {
    let d = layout.distance(cell, ue)?;
    Ok(rc.ptx_dbm - pathloss_uma(d, rc))
}

/// Interference at `ue` from the active neighbors of its serving cell, mW.
///
/// Each neighbor's RSRP is converted to mW before weighting and summing.
pub fn interference(
    layout: &NetworkLayout,
    serving: usize,
    ue: Point,
    active: &[bool],
    rc: &RadioConstants,
) -> Result<f64> {
    if active.len() != layout.len() {
        return Err(Error::DimensionMismatch {
            expected: layout.len(),
            found: active.len(),
        });
    }
    let mut total = 0.0;
    for &n in layout.neighbors(serving)? {
        if active[n] {
            total += rc.interference_alpha * dbm_to_mw(rsrp(layout, n, ue, rc)?);
        }
    }
    Ok(total)
}

/// Linear SINR from a received power in dBm and interference in mW.
pub fn sinr(rsrp_dbm: f64, interference_mw: f64, rc: &RadioConstants) -> f64 {
    dbm_to_mw(rsrp_dbm) / (interference_mw + rc.noise_mw())
}

/// DL throughput of `prbs` PRBs at the given SINR, bit/s.
pub fn shannon_throughput(prbs: u32, sinr: f64, rc: &RadioConstants) -> f64 {
    f64::from(prbs) * rc.rate_per_prb(sinr)
}

/// Smallest PRB count whose Shannon throughput covers `demand`.
///
/// The ceiling is corrected against [`shannon_throughput`] so that the
/// result is tight under the same floating-point evaluation.
pub fn prb_demand(demand: f64, sinr: f64, rc: &RadioConstants) -> Result<u32> {
    if demand <= 0.0 {
        return Ok(0);
    }
    let per_prb = rc.rate_per_prb(sinr);
    if !(per_prb > 0.0) {
        return Err(Error::InfeasibleDemand { demand });
    }
    let estimate = (demand / per_prb).ceil();
    if !estimate.is_finite() || estimate > f64::from(u32::MAX - 1) {
        return Err(Error::InfeasibleDemand { demand });
    }
    let mut n = estimate as u32;
    while shannon_throughput(n, sinr, rc) < demand {
        n += 1;
    }
    while n > 0 && shannon_throughput(n - 1, sinr, rc) >= demand {
        n -= 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rc() -> RadioConstants {
        RadioConstants::default()
    }

    #[test]
    fn pathloss_reference_point() {
        // 13.54 + 39.08 log10(sqrt(250^2 + 23.5^2)) + 20 log10(3.5), by hand
        let d3d: f64 = (250.0f64 * 250.0 + 23.5 * 23.5).sqrt();
        let hand = 13.54 + 39.08 * d3d.log10() + 20.0 * 3.5f64.log10();
        let pl = pathloss_uma(250.0, &rc());
        assert!((pl - hand).abs() < 1e-12);
        assert!((pl - 118.2).abs() < 0.05, "{pl}");
    }

    #[test]
    fn pathloss_height_term_vanishes_at_reference_height() {
        let mut a = rc();
        a.h_bs = 1.5 + 23.5;
        let mut b = a.clone();
        b.h_ut = 2.5;
        b.h_bs = 2.5 + 23.5;
        // same d3d, the only difference is -0.6 * (h_ut - 1.5)
        let diff = pathloss_uma(100.0, &a) - pathloss_uma(100.0, &b);
        assert!((diff - 0.6).abs() < 1e-12);
    }

    #[test]
    fn pathloss_monotone_and_clamped() {
        let r = rc();
        assert!(pathloss_uma(500.0, &r) > pathloss_uma(250.0, &r));
        assert_eq!(pathloss_uma(0.0, &r), pathloss_uma(1.0, &r));
        assert_eq!(pathloss_uma(0.3, &r), pathloss_uma(1.0, &r));
    }

    #[test]
    fn rsrp_examples() {
        let layout = NetworkLayout::grid(1, 2, 500.0, 1).unwrap();
        let r = rc();
        let site = layout.sites()[0].position;
        assert_eq!(rsrp(&layout, 0, site, &r).unwrap(), 46.0 - pathloss_uma(1.0, &r));
        let at_250 = Point::new(site.x, site.y + 250.0);
        let p = rsrp(&layout, 0, at_250, &r).unwrap();
        assert!((p - (-72.2)).abs() < 0.05, "{p}");
        assert!(rsrp(&layout, 0, at_250, &r).unwrap() >= rsrp(&layout, 1, at_250, &r).unwrap());
        assert!(rsrp(&layout, 5, at_250, &r).is_err());
    }

    #[test]
    fn interference_examples() {
        let layout = NetworkLayout::grid(1, 2, 500.0, 1).unwrap();
        let r = rc();
        let ue = Point::new(250.0, 250.0 + 250.0);
        assert_eq!(interference(&layout, 0, ue, &[true, false], &r).unwrap(), 0.0);
        let mut zero = rc();
        zero.interference_alpha = 0.0;
        assert_eq!(interference(&layout, 0, ue, &[true, true], &zero).unwrap(), 0.0);

        let i = interference(&layout, 0, ue, &[true, true], &r).unwrap();
        let expected = 10f64.powf(rsrp(&layout, 1, ue, &r).unwrap() / 10.0);
        assert!((i - expected).abs() <= 1e-15 * expected);
        // a neighbor at -72.2 dBm contributes 10^-7.22 mW
        assert!((dbm_to_mw(-72.2) - 6.0256e-8).abs() < 1e-11);
        assert!(interference(&layout, 0, ue, &[true], &r).is_err());
    }

    #[test]
    fn sinr_examples() {
        let mut r = rc();
        r.noise_dbm = -100.0;
        assert!((sinr(-100.0, 0.0, &r) - 1.0).abs() < 1e-12);
        assert!(sinr(-100.0, 1e30, &r) < 1e-20);

        r.noise_dbm = -102.4;
        let z = sinr(-72.2, 6.03e-8, &r);
        let hand = 10f64.powf(-7.22) / (6.03e-8 + 10f64.powf(-10.24));
        assert!((z - hand).abs() < 1e-12);
        assert!((z - 0.9983).abs() < 1e-4, "{z}");
    }

    #[test]
    fn throughput_examples() {
        let r = rc();
        assert_eq!(shannon_throughput(1, 1.0, &r), 360e3);
        assert_eq!(shannon_throughput(0, 5.0, &r), 0.0);
        assert_eq!(shannon_throughput(4, 0.0, &r), 0.0);
        let t = shannon_throughput(139, 3.0, &r);
        assert!((t - 1.0008e8).abs() < 1.0);
    }

    #[test]
    fn prb_demand_examples() {
        let r = rc();
        assert_eq!(prb_demand(360e3, 1.0, &r).unwrap(), 1);
        assert_eq!(prb_demand(360.001e3, 1.0, &r).unwrap(), 2);
        assert_eq!(prb_demand(0.1e9, 3.0, &r).unwrap(), 139);
        assert_eq!(prb_demand(0.0, 0.0, &r).unwrap(), 0);
        assert!(matches!(
            prb_demand(1e6, 0.0, &r),
            Err(Error::InfeasibleDemand { .. })
        ));
    }

    #[test]
    fn default_noise_is_thermal_over_one_prb() {
        let n = rc().noise_dbm;
        // -174 + 10 log10(360e3) + 9
        assert!((n - (-109.4370)).abs() < 1e-3, "{n}");
    }

    #[test]
    fn validate_rejects_bad_constants() {
        let mut r = rc();
        r.prb_bandwidth_hz = 0.0;
        assert!(r.validate().is_err());
        let mut r = rc();
        r.interference_alpha = -1.0;
        assert!(r.validate().is_err());
        let mut r = rc();
        r.carrier_ghz = f64::NAN;
        assert!(r.validate().is_err());
        assert!(rc().validate().is_ok());
    }
}
