//! Reference tools that share as little code as possible with the planner:
//! a Monte Carlo ergodic-rate estimator, a brute-force grid planner for tiny
//! instances, a finite-difference concavity scan and the verification suite
//! run by `seaplan verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{ergodic_rate, ergodic_rate_derivatives, LinkGains};
use crate::error::{Error, Result};
use crate::geometry::{distance, norm, sub, Vec3};
use crate::power::{epigraph_linear_form, epigraph_power_form};
use crate::scenario::Scenario;
use crate::trajectory::taylor_lower_bound;

/// Sample mean and standard error of `log2(1 + a·|h|²)` over `n` Rician
/// draws seeded by `seed`.
pub fn mc_ergodic_rate(a: f64, k: f64, n: usize, seed: u64) -> (f64, f64) {
    let n = n.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let los = (k / (1.0 + k)).sqrt();
    let sigma = (1.0 / (2.0 * (1.0 + k))).sqrt();
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..n {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let (hr, hi) = (los + sigma * re, sigma * im);
        let x = (a * (hr * hr + hi * hi)).ln_1p() / std::f64::consts::LN_2;
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    if n < 2 {
        return (mean, 0.0);
    }
    let var = m2 / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// `n` points log-spaced over `[lo, hi]`, both ends included.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    pub k: f64,
    pub points: usize,
    /// Smallest divided first difference of the rate over the grid.
    pub min_first_difference: f64,
    /// Largest divided second difference.
    pub max_second_difference: f64,
    /// Every quadrature first derivative positive and second negative.
    pub derivative_signs: bool,
    pub max_first_derivative_error: f64,
    pub max_second_derivative_error: f64,
}

impl ConcavityReport {
    pub fn passed(&self, derivative_tol: f64) -> bool {
        self.min_first_difference > 0.0
            && self.max_second_difference < 0.0
            && self.derivative_signs
            && self.max_first_derivative_error <= derivative_tol
            && self.max_second_derivative_error <= derivative_tol
    }
}

/// Finite-difference signs of the ergodic rate over `a_grid` plus the
/// relative gap between the quadrature derivatives and central differences
/// with step `1e-4·a`.
pub fn concavity_scan(k: f64, a_grid: &[f64]) -> Result<ConcavityReport> {
    if a_grid.len() < 3 || a_grid.iter().any(|a| !(*a > 0.0)) || a_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument {
            name: "a_grid",
            reason: "need at least three positive, strictly increasing points".into(),
        });
    }
    let rates = a_grid.iter().map(|&a| ergodic_rate(a, k)).collect::<Result<Vec<_>>>()?;
    let first: Vec<f64> = (0..a_grid.len() - 1)
        .map(|i| (rates[i + 1] - rates[i]) / (a_grid[i + 1] - a_grid[i]))
        .collect();
    let second: Vec<f64> = (1..a_grid.len() - 1)
        .map(|i| 2.0 * (first[i] - first[i - 1]) / (a_grid[i + 1] - a_grid[i - 1]))
        .collect();

    let mut signs = true;
    let (mut err1, mut err2) = (0.0_f64, 0.0_f64);
    for &a in a_grid {
        let h = 1e-4 * a;
        let (d1, d2) = ergodic_rate_derivatives(a, k)?;
        signs &= d1 > 0.0 && d2 < 0.0;
        let fd1 = (ergodic_rate(a + h, k)? - ergodic_rate(a - h, k)?) / (2.0 * h);
        let fd2 = (ergodic_rate_derivatives(a + h, k)?.0 - ergodic_rate_derivatives(a - h, k)?.0) / (2.0 * h);
        err1 = err1.max(((fd1 - d1) / d1).abs());
        err2 = err2.max(((fd2 - d2) / d2).abs());
    }
    Ok(ConcavityReport {
        k,
        points: a_grid.len(),
        min_first_difference: first.iter().copied().fold(f64::INFINITY, f64::min),
        max_second_difference: second.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        derivative_signs: signs,
        max_first_derivative_error: err1,
        max_second_derivative_error: err2,
    })
}

/// Discretization for [`grid_plan`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub power_levels: usize,
    /// Pins slot 0 to this point instead of searching it.
    pub start: Option<Vec3>,
    /// Upper limit on the number of position tuples.
    pub max_candidates: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            nx: 9,
            ny: 9,
            nz: 3,
            power_levels: 8,
            start: None,
            max_candidates: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPlan {
    pub q: f64,
    pub positions: Vec<Vec3>,
    pub powers: Vec<f64>,
    /// Position tuples enumerated.
    pub candidates: usize,
    /// Position tuples that passed the kinematic checks.
    pub kinematically_feasible: usize,
    /// Grid spacing along each axis.
    pub step: Vec3,
}

fn axis(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    if n <= 1 || hi <= lo {
        return (vec![0.5 * (lo + hi)], 0.0);
    }
    let step = (hi - lo) / (n - 1) as f64;
    ((0..n).map(|i| lo + step * i as f64).collect(), step)
}

/// Per-slot position grid over the bounding box of the base station and the
/// user track, times the altitude band.
pub fn grid_points(scenario: &Scenario, spec: &GridSpec) -> (Vec<Vec3>, Vec3) {
    let mut lo = [scenario.tbs_position[0], scenario.tbs_position[1]];
    let mut hi = lo;
    for u in &scenario.user_track {
        for i in 0..2 {
            lo[i] = lo[i].min(u[i]);
            hi[i] = hi[i].max(u[i]);
        }
    }
    let (xs, sx) = axis(lo[0], hi[0], spec.nx);
    let (ys, sy) = axis(lo[1], hi[1], spec.ny);
    let (zs, sz) = axis(scenario.limits.z_min, scenario.limits.z_max, spec.nz);
    let mut pts = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &x in &xs {
        for &y in &ys {
            for &z in &zs {
                pts.push([x, y, z]);
            }
        }
    }
    (pts, [sx, sy, sz])
}

const SLACK: f64 = 1e-12;

/// Finite-difference kinematics: `v_t = (c_{t+1} − c_t)/Δt` (last repeated),
/// `a_t = (v_{t+1} − v_t)/Δt` (last zero). Checks the speed, acceleration and
/// position-update limits exactly.
fn kinematics_ok(scenario: &Scenario, c: &[Vec3]) -> bool {
    let lim = &scenario.limits;
    let dt = scenario.dt;
    let t_len = c.len();
    if t_len < 2 {
        return true;
    }
    let v: Vec<Vec3> = (0..t_len)
        .map(|t| {
            let t = t.min(t_len - 2);
            let d = sub(c[t + 1], c[t]);
            [d[0] / dt, d[1] / dt, d[2] / dt]
        })
        .collect();
    for t in 0..t_len {
        let s = norm(v[t]);
        if s > lim.v_max * (1.0 + SLACK) || s < lim.v_min * (1.0 - SLACK) {
            return false;
        }
        if t + 1 < t_len {
            let a = sub(v[t + 1], v[t]);
            let a = [a[0] / dt, a[1] / dt, a[2] / dt];
            if norm(a) > lim.a_max * (1.0 + SLACK) {
                return false;
            }
            for i in 0..3 {
                let residual = c[t + 1][i] - c[t][i] - v[t][i] * dt - 0.5 * a[i] * dt * dt;
                if residual.abs() > lim.delta_c0 * (1.0 + SLACK) {
                    return false;
                }
            }
        }
    }
    true
}

/// Exhaustive max-min SNR search for `T ≤ 3`. Every candidate satisfies the
/// original constraints: altitude box by construction, speed, acceleration
/// and position-update limits on finite-difference kinematics, per-slot
/// power caps from backhaul (equal Rician factors make the rate comparison
/// an SNR comparison) and interference, and the energy budget.
pub fn grid_plan(scenario: &Scenario, spec: &GridSpec) -> Result<GridPlan> {
    let t_len = scenario.num_slots();
    if !(1..=3).contains(&t_len) {
        return Err(Error::InvalidArgument {
            name: "scenario",
            reason: format!("grid oracle needs T ≤ 3, got {t_len}"),
        });
    }
    if spec.power_levels < 2 {
        return Err(Error::InvalidArgument {
            name: "power_levels",
            reason: "need at least two power levels".into(),
        });
    }
    let (pts, step) = grid_points(scenario, spec);
    let free = if spec.start.is_some() { t_len - 1 } else { t_len };
    let candidates = pts.len().checked_pow(free as u32).unwrap_or(usize::MAX);
    if candidates > spec.max_candidates {
        return Err(Error::InvalidArgument {
            name: "grid",
            reason: format!("{candidates} position tuples exceed the limit of {}", spec.max_candidates),
        });
    }

    let lim = scenario.limits;
    let gains = LinkGains::new(scenario);
    let exponent = scenario.pathloss.exponent;
    let ladder: Vec<f64> = (0..spec.power_levels)
        .map(|l| lim.p_max * l as f64 / (spec.power_levels - 1) as f64)
        .collect();
    let combos = spec.power_levels.pow(t_len as u32);

    let decode = |mut idx: usize| -> Vec<Vec3> {
        let mut c = Vec::with_capacity(t_len);
        if let Some(s) = spec.start {
            c.push(s);
        }
        while c.len() < t_len {
            c.push(pts[idx % pts.len()]);
            idx /= pts.len();
        }
        c
    };

    let evaluate = |idx: usize| -> Option<(f64, Vec<f64>)> {
        let c = decode(idx);
        if !kinematics_ok(scenario, &c) {
            return None;
        }
        let mut snr_per_watt = Vec::with_capacity(t_len);
        let mut caps = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let d_u = distance(c[t], scenario.user_track[t]);
            let d_s = distance(c[t], scenario.tbs_position);
            if d_u == 0.0 || d_s == 0.0 {
                return None;
            }
            let g = gains.uav_user[t].b * d_u.powf(-exponent);
            let mut cap = lim.p_s * gains.tbs_uav[t].b * d_s.powf(-exponent) / g;
            for (j, victim) in scenario.victim_tracks[t].iter().enumerate() {
                let d_j = distance(c[t], *victim);
                if d_j == 0.0 {
                    return None;
                }
                let per_watt = gains.uav_victim[t][j].b * scenario.noise_power * d_j.powf(-exponent);
                cap = cap.min(lim.i0 / per_watt);
            }
            snr_per_watt.push(g);
            caps.push(cap);
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for combo in 0..combos {
            let mut rest = combo;
            let mut p = Vec::with_capacity(t_len);
            for _ in 0..t_len {
                p.push(ladder[rest % ladder.len()]);
                rest /= ladder.len();
            }
            if p.iter().zip(&caps).any(|(p, cap)| *p > *cap) {
                continue;
            }
            if p.iter().sum::<f64>() * scenario.dt > lim.e0 {
                continue;
            }
            let q = p
                .iter()
                .zip(&snr_per_watt)
                .map(|(p, g)| p * g)
                .fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|(bq, _)| q > *bq) {
                best = Some((q, p));
            }
        }
        best
    };

    let results: Vec<Option<(f64, Vec<f64>)>> = (0..candidates).into_par_iter().map(evaluate).collect();
    let kinematically_feasible = results.iter().filter(|r| r.is_some()).count();
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in results.iter().enumerate() {
        if let Some((q, _)) = r {
            if best.is_none_or(|(_, bq)| *q > bq) {
                best = Some((i, *q));
            }
        }
    }
    let (idx, q) = best.ok_or_else(|| Error::Infeasible("no grid point satisfies the kinematic limits".into()))?;
    let powers = results[idx].as_ref().map(|(_, p)| p.clone()).unwrap_or_default();
    Ok(GridPlan {
        q,
        positions: decode(idx),
        powers,
        candidates,
        kinematically_feasible,
        step,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub k_values: Vec<f64>,
    pub mc_samples: usize,
    pub mc_pairs: usize,
    pub minorant_triples: usize,
    pub power_tuples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            k_values: vec![0.0, 1.0, 10.0, 30.0, 31.3],
            mc_samples: 100_000,
            mc_pairs: 20,
            minorant_triples: 10_000,
            power_tuples: 1_000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn random_point(rng: &mut ChaCha8Rng, half_width: f64) -> Vec3 {
    [
        rng.random_range(-half_width..half_width),
        rng.random_range(-half_width..half_width),
        rng.random_range(-half_width..half_width),
    ]
}

/// Worst violation of `taylor ≤ ‖x − anchor‖²` relative to the squared
/// sampling scale, and worst relative gap at the expansion point over `n` random triples.
pub fn minorant_dominance(n: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut violation, mut at_reference) = (f64::NEG_INFINITY, 0.0_f64);
    for _ in 0..n {
        let scale = 10f64.powf(rng.random_range(0.0..5.0));
        let reference = random_point(&mut rng, scale);
        let anchor = random_point(&mut rng, scale);
        let x = random_point(&mut rng, scale);
        let exact = {
            let d = sub(x, anchor);
            d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
        };
        let lower = taylor_lower_bound(reference, anchor, x);
        violation = violation.max((lower - exact) / (scale * scale));
        let d = sub(reference, anchor);
        let at = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        let gap = (taylor_lower_bound(reference, anchor, reference) - at).abs() / at.max(f64::MIN_POSITIVE);
        at_reference = at_reference.max(gap);
    }
    (violation, at_reference)
}

/// Number of random `(Q, P, d, B, ς)` tuples on which the power form and the
/// linear form of the epigraph constraint disagree.
pub fn power_form_disagreements(n: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .filter(|_| {
            let exponent = rng.random_range(2.0..4.0);
            let d = 10f64.powf(rng.random_range(1.0..5.0));
            let b = 10f64.powf(rng.random_range(6.0..12.0));
            let p = rng.random_range(0.0..10.0);
            let q = b * p * d.powf(-exponent) * rng.random_range(0.5..1.5);
            epigraph_power_form(q, p, d, b, exponent) != epigraph_linear_form(q, p, d, b, exponent)
        })
        .count()
}

pub fn verify_suite(options: &VerifyOptions) -> Result<Vec<VerifyCheck>> {
    let mut checks = Vec::new();
    let grid = log_spaced(1e-2, 1e4, 50);
    for &k in &options.k_values {
        let r = concavity_scan(k, &grid)?;
        checks.push(VerifyCheck {
            name: format!("concavity K={k}"),
            passed: r.passed(1e-4),
            detail: format!(
                "min ΔR {:.3e}, max Δ²R {:.3e}, derivative errors {:.1e} / {:.1e}",
                r.min_first_difference,
                r.max_second_difference,
                r.max_first_derivative_error,
                r.max_second_derivative_error
            ),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut worst = 0.0_f64;
    for i in 0..options.mc_pairs {
        let a = 10f64.powf(rng.random_range(-2.0..4.0));
        let k = options.k_values[rng.random_range(0..options.k_values.len())];
        let exact = ergodic_rate(a, k)?;
        let (mean, se) = mc_ergodic_rate(a, k, options.mc_samples, options.seed.wrapping_add(i as u64 + 1));
        worst = worst.max((exact - mean).abs() / se.max(f64::MIN_POSITIVE));
    }
    checks.push(VerifyCheck {
        name: "quadrature vs Monte Carlo".into(),
        passed: worst <= 3.0,
        detail: format!("{} pairs, {} samples, worst gap {worst:.2} σ", options.mc_pairs, options.mc_samples),
    });

    let (violation, at_reference) = minorant_dominance(options.minorant_triples, options.seed);
    checks.push(VerifyCheck {
        name: "Taylor minorant dominance".into(),
        passed: violation <= 1e-12 && at_reference <= 1e-12,
        detail: format!(
            "{} triples, worst excess {violation:.1e}, worst gap at expansion point {at_reference:.1e}",
            options.minorant_triples
        ),
    });

    let disagreements = power_form_disagreements(options.power_tuples, options.seed);
    checks.push(VerifyCheck {
        name: "power form equivalence".into(),
        passed: disagreements == 0,
        detail: format!("{disagreements} of {} tuples disagree", options.power_tuples),
    });
    Ok(checks)
}
