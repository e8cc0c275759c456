#![allow(dead_code)]

pub mod simplex;

use seaplan_core::convex::{ConvexSubproblem, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `max cᵀx, Ax ≤ b, x ≥ 0` with `b > 0` (so the origin is feasible) and a
/// budget row `Σx ≤ 50` that keeps it bounded.
pub struct RandomLp {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl RandomLp {
    pub fn generate(seed: u64, n: usize, m: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut b: Vec<f64> = (0..m).map(|_| rng.random_range(1.0..10.0)).collect();
        a.push(vec![1.0; n]);
        b.push(50.0);
        RandomLp { c, a, b }
    }

    pub fn to_problem(&self) -> ConvexSubproblem {
        let n = self.c.len();
        let mut p = ConvexSubproblem::new(n);
        p.objective = self.c.clone();
        for j in 0..n {
            p.set_bounds(j, 0.0, f64::INFINITY);
        }
        for (i, (row, b)) in self.a.iter().zip(&self.b).enumerate() {
            let coeffs = row.iter().enumerate().map(|(j, v)| (j, *v)).collect();
            p.add_linear(format!("row[{i}]"), coeffs, Sense::Le, *b);
        }
        p
    }
}

pub fn assert_close(actual: f64, expected: f64, rel: f64, what: &str) {
    let err = (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
    assert!(err <= rel, "{what}: got {actual:e}, expected {expected:e} (relative error {err:e} > {rel:e})");
}

/// The first `t` slots of `s`, shadowing included.
pub fn truncated(s: &seaplan_core::Scenario, t: usize) -> seaplan_core::Scenario {
    let mut r = s.clone();
    r.user_track.truncate(t);
    r.victim_tracks.truncate(t);
    r.shadowing.uav_user.truncate(t);
    r.shadowing.tbs_uav.truncate(t);
    r.shadowing.uav_victim.truncate(t);
    r
}

/// Removes every victim.
pub fn without_victims(s: &seaplan_core::Scenario) -> seaplan_core::Scenario {
    let mut r = s.clone();
    for v in &mut r.victim_tracks {
        v.clear();
    }
    for v in &mut r.shadowing.uav_victim {
        v.clear();
    }
    r
}
