mod common;

use common::{truncated, without_victims};
use seaplan_core::channel::{ergodic_rate, ergodic_rate_derivatives, LinkGains};
use seaplan_core::geometry::distance;
use seaplan_core::oracle::{concavity_scan, grid_plan, log_spaced, mc_ergodic_rate, GridSpec};
use seaplan_core::{paper_scenario, Scenario};
use std::f64::consts::LOG2_E;

fn single_slot() -> Scenario {
    let mut s = without_victims(&truncated(&paper_scenario(), 1));
    s.user_track = vec![[4000.0, 3000.0, 10.0]];
    s.limits.p_s = 1e6;
    s.limits.e0 = 1e9;
    s
}

#[test]
fn zero_snr_gives_zero_rate_and_zero_error() {
    assert_eq!(mc_ergodic_rate(0.0, 31.3, 100, 4), (0.0, 0.0));
}

#[test]
fn single_slot_optimum_is_above_the_user_at_full_power() {
    let s = single_slot();
    let g = grid_plan(&s, &GridSpec::default()).unwrap();
    assert_eq!(g.positions, vec![[4000.0, 3000.0, s.limits.z_min]]);
    assert_eq!(g.powers, vec![s.limits.p_max]);
}

#[test]
fn a_close_victim_lowers_the_grid_optimum() {
    let mut s = single_slot();
    let free = grid_plan(&s, &GridSpec::default()).unwrap();
    let best = free.positions[0];
    s.victim_tracks = vec![vec![[best[0], best[1] - 5000.0, 10.0]]];
    s.shadowing.uav_victim = vec![vec![0.0]];
    let g = LinkGains::new(&s);
    let radius = (g.uav_victim[0][0].b * s.noise_power * s.limits.p_max / s.limits.i0).powf(1.0 / s.pathloss.exponent);
    assert!(distance(best, s.victim_tracks[0][0]) < radius);
    let blocked = grid_plan(&s, &GridSpec::default()).unwrap();
    assert!(blocked.q < free.q, "{} vs {}", blocked.q, free.q);
}

#[test]
fn grid_rejects_long_horizons_and_huge_grids() {
    let s = paper_scenario();
    assert!(grid_plan(&s, &GridSpec::default()).is_err());
    let fine = GridSpec { nx: 20, ny: 20, ..GridSpec::default() };
    assert!(grid_plan(&seaplan_core::toy_scenario(), &fine).is_err());
}

#[test]
fn grid_search_is_deterministic() {
    let s = truncated(&paper_scenario(), 2);
    assert_eq!(grid_plan(&s, &GridSpec::default()).unwrap(), grid_plan(&s, &GridSpec::default()).unwrap());
}

#[test]
fn rate_is_concave_increasing_at_k30() {
    let r = concavity_scan(30.0, &log_spaced(1e-2, 1e4, 50)).unwrap();
    assert!(r.min_first_difference > 0.0);
    assert!(r.max_second_difference < 0.0);
    assert!(r.passed(1e-4), "{r:?}");
}

#[test]
fn derivative_matches_central_difference_at_k10_a1() {
    let h = 1e-4;
    let fd = (ergodic_rate(1.0 + h, 10.0).unwrap() - ergodic_rate(1.0 - h, 10.0).unwrap()) / (2.0 * h);
    let (d1, _) = ergodic_rate_derivatives(1.0, 10.0).unwrap();
    assert!(((fd - d1) / d1).abs() <= 1e-4);
}

#[test]
fn rayleigh_slope_at_the_origin_is_log2e() {
    let (d1, _) = ergodic_rate_derivatives(0.0, 0.0).unwrap();
    assert!((d1 - LOG2_E).abs() <= 1e-10, "{d1}");
}
