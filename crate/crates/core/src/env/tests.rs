use super::*;
use crate::rng::rng_from_seed;

fn line_config(cols: usize) -> EnvConfig {
    EnvConfig {
        rows: 1,
        cols,
        ..EnvConfig::default()
    }
}

fn n_per_cell(state: &ScenarioState) -> Vec<usize> {
    (0..state.n_cells())
        .map(|c| state.cell_aggregates(c).unwrap().n_ues)
        .collect()
}

#[test]
fn reset_places_every_ue() {
    let state = ScenarioState::reset(&EnvConfig::default(), 1).unwrap();
    assert_eq!(state.ues().len(), 40);
    assert_eq!(n_per_cell(&state).iter().sum::<usize>(), 40);
    assert_eq!(state.active_count(), 12);
    for ue in state.ues() {
        assert!(state.active()[ue.serving_cell]);
        assert!((0.01e9..=0.1e9).contains(&ue.demand));
        let site = state.layout().sites()[ue.serving_cell].position;
        // admitted to the strongest cell, which is the nearest one
        for other in state.layout().sites() {
            assert!(site.distance(ue.position) <= other.position.distance(ue.position) + 1e-9);
        }
    }
}

#[test]
fn reset_is_deterministic() {
    let a = ScenarioState::reset(&EnvConfig::default(), 99).unwrap();
    let b = ScenarioState::reset(&EnvConfig::default(), 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.observe(), b.observe());
    let c = ScenarioState::reset(&EnvConfig::default(), 100).unwrap();
    assert_ne!(a.ues(), c.ues());
}

#[test]
fn reset_rejects_empty_population() {
    let cfg = EnvConfig {
        n_ues: 0,
        ..EnvConfig::default()
    };
    assert!(matches!(ScenarioState::reset(&cfg, 0), Err(Error::Config { .. })));
}

#[test]
fn single_remaining_cell_takes_everyone() {
    let mut state = ScenarioState::reset(&line_config(2), 5).unwrap();
    state.apply_shutdown(1).unwrap();
    assert!(state.ues().iter().all(|u| u.serving_cell == 0));
    assert_eq!(state.admit_ue(Point::new(900.0, 250.0)).unwrap(), 0);
}

#[test]
fn admission_rules() {
    let state = ScenarioState::from_placements(&line_config(3), vec![], 0).unwrap();
    for site in state.layout().sites() {
        assert_eq!(state.admit_ue(site.position).unwrap(), site.id);
    }
    // midway between sites 0 and 1
    assert_eq!(state.admit_ue(Point::new(500.0, 250.0)).unwrap(), 0);
    // 100 m, 400 m and 900 m from the three sites
    let ue = Point::new(350.0, 250.0);
    let rc = &state.config().radio;
    let p: Vec<f64> = (0..3).map(|c| radio::rsrp(state.layout(), c, ue, rc).unwrap()).collect();
    assert!(p[0] > p[1] && p[1] > p[2]);
    assert_eq!(state.admit_ue(ue).unwrap(), 0);
}

#[test]
fn no_coverage_without_active_cells() {
    let layout = NetworkLayout::grid(1, 2, 500.0, 1).unwrap();
    let err = admit(&layout, &[false, false], Point::default(), &radio::RadioConstants::default());
    assert!(matches!(err, Err(Error::NoCoverage)));
}

#[test]
fn ue_state_matches_link_equations() {
    let state = ScenarioState::reset(&EnvConfig::default(), 4).unwrap();
    let rc = &state.config().radio;
    for ue in state.ues() {
        let rsrp = radio::rsrp(state.layout(), ue.serving_cell, ue.position, rc).unwrap();
        let int = radio::interference(state.layout(), ue.serving_cell, ue.position, state.active(), rc)
            .unwrap();
        assert_eq!(ue.rsrp_dbm, rsrp);
        assert_eq!(ue.interference, int);
        assert_eq!(ue.sinr, radio::sinr(rsrp, int, rc));
        assert_eq!(ue.prbs_demanded, radio::prb_demand(ue.demand, ue.sinr, rc).unwrap());
        assert!(ue.prbs <= ue.prbs_demanded);
        assert_eq!(ue.throughput, radio::shannon_throughput(ue.prbs, ue.sinr, rc));
    }
    let cap = state.config().power.user_capacity();
    for c in 0..state.n_cells() {
        assert!(state.cell_aggregates(c).unwrap().tot_prbs <= cap);
    }
}

#[test]
fn summary_matches_brute_force_resummation() {
    let state = ScenarioState::reset(&EnvConfig::default(), 8).unwrap();
    let s = state.network_summary().unwrap();
    let pp = &state.config().power;
    let (mut p, mut r, mut prb, mut int) = (0.0, 0.0, 0.0, 0.0);
    for cell in 0..12 {
        let members: Vec<&UeSession> = state.ues().iter().filter(|u| u.serving_cell == cell).collect();
        let cell_prbs: u32 = members.iter().map(|u| u.prbs).sum();
        p += pp.p_idle_w + f64::from(cell_prbs + pp.prb_floor) * pp.p_prb_w / pp.eta;
        r += members.iter().map(|u| u.throughput).sum::<f64>();
        prb += f64::from(cell_prbs);
        int += members.iter().map(|u| u.interference).sum::<f64>();
    }
    assert!((s.p_avrg - p / 12.0).abs() <= 1e-9 * s.p_avrg);
    assert!((s.r_avrg - r / 12.0).abs() <= 1e-9 * s.r_avrg);
    assert!((s.prb_avg - prb / 12.0).abs() <= 1e-9);
    assert!((s.tot_interference - int).abs() <= 1e-9 * int);
    assert!((s.ee_total * s.p_avrg - s.r_avrg).abs() <= 1e-12 * s.r_avrg);
}

#[test]
fn cell_aggregate_invariants() {
    let state = ScenarioState::reset(&EnvConfig::default(), 12).unwrap();
    for c in 0..12 {
        let a = state.cell_aggregates(c).unwrap();
        if a.n_ues > 0 {
            let rel = (a.avg_thp * a.n_ues as f64 - a.tot_thp).abs() / a.tot_thp.max(1.0);
            assert!(rel <= 1e-9);
        } else {
            assert_eq!(a.avg_thp, 0.0);
        }
    }
    assert!(state.cell_aggregates(12).is_err());
}

#[test]
fn handover_weights_over_active_neighbors() {
    let state = ScenarioState::reset(&EnvConfig::default(), 2).unwrap();
    let w = state.handover_weights(4).unwrap();
    let neigh: Vec<usize> = {
        let mut n = state.layout().neighbors(4).unwrap().to_vec();
        n.sort();
        n
    };
    assert_eq!(w.iter().map(|x| x.0).collect::<Vec<_>>(), neigh);
    assert!((w.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn handover_weights_fall_back_to_all_active_cells() {
    let cfg = EnvConfig {
        neighbor_count: 1,
        ..line_config(3)
    };
    let mut state = ScenarioState::reset(&cfg, 3).unwrap();
    // cell 0's only neighbor is 1; once 1 is off, 0 must fall back to cell 2
    state.apply_shutdown(1).unwrap();
    let w = state.handover_weights(0).unwrap();
    assert_eq!(w, vec![(2, 1.0)]);
    assert!(state.handover_weights(1).is_err());
}

#[test]
fn redistribution_of_empty_cell_changes_only_the_flag() {
    let placements = vec![(Point::new(250.0, 250.0), 1e7)];
    let mut state = ScenarioState::from_placements(&line_config(3), placements, 0).unwrap();
    let before = state.ues().to_vec();
    let (records, dropped) = state.redistribute_ues(2, &mut rng_from_seed(0)).unwrap();
    assert!(records.is_empty());
    assert_eq!(dropped, 0);
    assert_eq!(state.active(), &[true, true, false]);
    assert_eq!(state.ues()[0].serving_cell, before[0].serving_cell);
    assert_eq!(state.ues()[0].position, before[0].position);
}

#[test]
fn single_neighbor_receives_all() {
    let mut state = ScenarioState::reset(&line_config(2), 17).unwrap();
    let n0 = state.cell_aggregates(0).unwrap().n_ues;
    let outcome = state.apply_shutdown(0).unwrap();
    assert_eq!(outcome.handovers.len(), n0);
    assert!(outcome.handovers.iter().all(|h| h.to == 1 && h.from == 0 && h.a3_best == 1));
    assert_eq!(state.cell_aggregates(1).unwrap().n_ues, 40);
}

#[test]
fn shutdown_conserves_ues_and_fills_outcome() {
    let mut state = ScenarioState::reset(&EnvConfig::default(), 21).unwrap();
    let moved = state.cell_aggregates(5).unwrap().n_ues;
    let outcome = state.apply_shutdown(5).unwrap();
    assert_eq!(n_per_cell(&state).iter().sum::<usize>(), 40);
    assert_eq!(outcome.handovers.len(), moved);
    assert_eq!(outcome.before.active_count(), 12);
    assert_eq!(outcome.after.active_count(), 11);
    assert!(!outcome.after.per_cell[5].active);
    let expected = state.config().objective.w_perf * outcome.g_perf
        + state.config().objective.w_power * outcome.p_gain
        - outcome.violations.len() as f64;
    assert_eq!(outcome.reward, expected);
    assert!(state.ues().iter().all(|u| state.active()[u.serving_cell]));
}

#[test]
fn shutting_an_empty_cell_moves_nobody() {
    // UEs only around site 0 of a 1x3 line; cell 2 is empty and not a
    // neighbor of cell 0 with k_n = 1.
    let cfg = EnvConfig {
        neighbor_count: 1,
        ..line_config(3)
    };
    let placements = vec![(Point::new(200.0, 250.0), 2e7), (Point::new(300.0, 250.0), 2e7)];
    let mut state = ScenarioState::from_placements(&cfg, placements, 0).unwrap();
    let outcome = state.apply_shutdown(2).unwrap();
    assert!(outcome.handovers.is_empty());
    assert_eq!(outcome.g_perf, 0.0);
    let pp = &cfg.power;
    let p_before = outcome.before.p_avrg;
    let idle_cell = pp.p_idle_w + f64::from(pp.prb_floor) * pp.p_prb_w / pp.eta;
    let p_after = (3.0 * p_before - idle_cell) / 2.0;
    assert!((outcome.p_gain - (p_before - p_after) / pp.p_max_w).abs() < 1e-12);
}

#[test]
fn illegal_shutdowns_are_rejected() {
    let mut state = ScenarioState::reset(&line_config(2), 0).unwrap();
    state.apply_shutdown(0).unwrap();
    assert!(matches!(state.apply_shutdown(0), Err(Error::IllegalAction(_))));
    assert!(matches!(state.apply_shutdown(1), Err(Error::IllegalAction(_))));
    assert!(matches!(state.apply_shutdown(7), Err(Error::InvalidCell { .. })));
}

#[test]
fn power_total_tracks_incrementally() {
    let cfg = EnvConfig {
        horizon: 6,
        ..EnvConfig::default()
    };
    let mut state = ScenarioState::reset(&cfg, 31).unwrap();
    for cell in [3, 7, 0, 11] {
        state.apply_shutdown(cell).unwrap();
        let scratch: f64 = (0..12).map(|c| state.cell_aggregates(c).unwrap().power_w).sum();
        assert!((state.power_total() - scratch).abs() <= 1e-9 * scratch);
    }
}

#[test]
fn dropping_ues_lowers_total_power_by_at_least_idle() {
    let mut cfg = EnvConfig::default();
    cfg.handover.redistribute = false;
    for seed in 0..20 {
        let state = ScenarioState::reset(&cfg, seed).unwrap();
        for cell in 0..12 {
            let mut s = state.clone();
            let before = s.power_total();
            let outcome = s.apply_shutdown(cell).unwrap();
            assert!(before - s.power_total() >= cfg.power.p_idle_w);
            assert_eq!(outcome.dropped_ues, state.cell_aggregates(cell).unwrap().n_ues);
        }
    }
}

#[test]
fn step_horizon_and_invalid_actions() {
    let mut state = ScenarioState::reset(&EnvConfig::default(), 6).unwrap();
    let r = state.step(2).unwrap();
    assert!(r.done);
    assert!(r.outcome.is_some());

    let cfg = EnvConfig {
        horizon: 3,
        ..EnvConfig::default()
    };
    let mut state = ScenarioState::reset(&cfg, 6).unwrap();
    state.step(2).unwrap();
    let before = state.clone();
    let r = state.step(2).unwrap();
    assert_eq!(r.reward, -cfg.objective.penalty);
    assert!(r.outcome.is_none());
    assert!(!r.done);
    assert_eq!(state.active(), before.active());
    assert_eq!(state.ues(), before.ues());
    assert_eq!(state.step_count(), 2);

    let r = state.step(99).unwrap();
    assert_eq!(r.reward, -cfg.objective.penalty);
    assert!(r.done);
}

#[test]
fn two_step_episode_shuts_two_cells() {
    let cfg = EnvConfig {
        horizon: 2,
        ..EnvConfig::default()
    };
    let mut state = ScenarioState::reset(&cfg, 13).unwrap();
    let first = state.step(4).unwrap();
    assert!(!first.done);
    let second = state.step(9).unwrap();
    assert!(second.done);
    assert_eq!(state.active_count(), 10);
    assert!(!state.active()[4] && !state.active()[9]);
    assert_eq!(n_per_cell(&state).iter().sum::<usize>(), 40);
}

#[test]
fn episode_ends_when_one_cell_remains() {
    let cfg = EnvConfig {
        horizon: 10,
        ..line_config(2)
    };
    let mut state = ScenarioState::reset(&cfg, 1).unwrap();
    assert!(state.step(1).unwrap().done);
}

#[test]
fn observation_shape_and_range() {
    for seed in 0..10 {
        let state = ScenarioState::reset(&EnvConfig::default(), seed).unwrap();
        let obs = state.observe();
        assert_eq!(obs.len(), 60);
        assert_eq!(obs.len(), state.observation_len());
        // the mean-throughput feature may exceed 1 by at most one PRB's rate
        assert!(obs.iter().all(|&x| (0.0..=1.1).contains(&x)), "{obs:?}");
    }
}

#[test]
fn observation_zeroes_inactive_cells() {
    let mut state = ScenarioState::reset(&EnvConfig::default(), 3).unwrap();
    state.apply_shutdown(6).unwrap();
    let obs = state.observe();
    assert!(obs[30..35].iter().all(|&x| x == 0.0));
    assert!(obs.iter().all(|&x| x <= 1.1));
}

#[test]
fn observation_permutes_with_mirrored_scenario() {
    let cfg = line_config(2);
    let left = vec![(Point::new(100.0, 250.0), 3e7), (Point::new(300.0, 200.0), 5e7)];
    let right: Vec<(Point, f64)> = left
        .iter()
        .map(|(p, d)| (Point::new(1000.0 - p.x, p.y), *d))
        .collect();
    let a = ScenarioState::from_placements(&cfg, left, 0).unwrap().observe();
    let b = ScenarioState::from_placements(&cfg, right, 0).unwrap().observe();
    assert_eq!(&a[0..5], &b[5..10]);
    assert_eq!(&a[5..10], &b[0..5]);
}

#[test]
fn planted_scenarios_leave_exactly_one_empty_cell() {
    let cfg = EnvConfig {
        scenario: ScenarioKind::PlantedEmpty,
        ..EnvConfig::default()
    };
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..60 {
        let state = ScenarioState::reset(&cfg, seed).unwrap();
        let counts = n_per_cell(&state);
        let empty: Vec<usize> = (0..12).filter(|&c| counts[c] == 0).collect();
        assert_eq!(empty.len(), 1, "{counts:?}");
        seen.insert(empty[0]);
        assert_eq!(counts.iter().sum::<usize>(), 40);
    }
    assert!(seen.len() >= 10);
}

#[test]
fn aggregate_mode_shutdown_moves_load() {
    let cfg = line_config(3);
    let loads = vec![
        CellLoad { n_ues: 2, prbs: 20, throughput: 4e7, interference: 1e-9 },
        CellLoad { n_ues: 3, prbs: 31, throughput: 6e7, interference: 2e-9 },
        CellLoad { n_ues: 0, prbs: 0, throughput: 0.0, interference: 0.0 },
    ];
    let mut state = ScenarioState::from_aggregates(&cfg, loads, vec![true; 3], 9).unwrap();
    assert!(state.is_aggregate());
    assert_eq!(state.total_ues(), 5);
    let before = state.network_summary().unwrap();
    assert_eq!(before.r_avrg, 1e8 / 3.0);
    let outcome = state.apply_shutdown(1).unwrap();
    let after = &outcome.after;
    let n: usize = after.per_cell.iter().map(|c| c.n_ues).sum();
    let prbs: u32 = after.per_cell.iter().map(|c| c.tot_prbs).sum();
    let thp: f64 = after.per_cell.iter().map(|c| c.tot_thp).sum();
    assert_eq!(n, 5);
    assert_eq!(prbs, 51);
    assert!((thp - 1e8).abs() < 1e-3);
}

#[test]
fn aggregate_mode_rejects_bad_shapes() {
    let cfg = line_config(3);
    let one = CellLoad { n_ues: 1, prbs: 1, throughput: 1.0, interference: 0.0 };
    assert!(ScenarioState::from_aggregates(&cfg, vec![one.clone()], vec![true], 0).is_err());
    assert!(matches!(
        ScenarioState::from_aggregates(&cfg, vec![one.clone(), one.clone(), one], vec![false; 3], 0),
        Err(Error::NoActiveCells)
    ));
}
