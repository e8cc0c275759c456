//! Trajectory step: the linearised feasibility problem for a candidate `Q`
//! and the bisection that searches for the largest feasible `Q`.
//!
//! Decision variables are stored per slot as nine scaled entries
//! `[X, V, A]` with `X = c / 1000` (km), `V = v / v_max` and `A = a / a_max`.
//! Every row is normalised so that its coefficients are of order one.

use crate::channel::LinkGains;
use crate::convex::{check_feasible, solve_with_hint, Affine, ConvexSubproblem, Sense, SolveResult, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{distance, dot, norm, norm_sq, sub, Vec3};
use crate::scenario::Scenario;

/// Metres per position unit in the scaled problem.
pub const LENGTH_SCALE: f64 = 1000.0;
pub const VARS_PER_SLOT: usize = 9;

pub fn position_var(t: usize, k: usize) -> usize {
    VARS_PER_SLOT * t + k
}

pub fn velocity_var(t: usize, k: usize) -> usize {
    VARS_PER_SLOT * t + 3 + k
}

pub fn acceleration_var(t: usize, k: usize) -> usize {
    VARS_PER_SLOT * t + 6 + k
}

/// Expansion point of the first-order minorants.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationPoint {
    pub c_ref: Vec<Vec3>,
    pub v_ref: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub accelerations: Vec<Vec3>,
}

impl Kinematics {
    /// Velocities and accelerations by forward differences; the last slot
    /// repeats the previous velocity and has zero acceleration. A single
    /// slot cruises along +x at the mid-range speed.
    pub fn from_positions(positions: &[Vec3], dt: f64, v_min: f64, v_max: f64) -> Self {
        let t_len = positions.len();
        if t_len == 1 {
            return Kinematics {
                positions: positions.to_vec(),
                velocities: vec![[0.5 * (v_min + v_max), 0.0, 0.0]],
                accelerations: vec![[0.0; 3]],
            };
        }
        let mut velocities: Vec<Vec3> = positions
            .windows(2)
            .map(|w| crate::geometry::scale(sub(w[1], w[0]), 1.0 / dt))
            .collect();
        velocities.push(velocities[t_len - 2]);
        let mut accelerations: Vec<Vec3> = velocities
            .windows(2)
            .map(|w| crate::geometry::scale(sub(w[1], w[0]), 1.0 / dt))
            .collect();
        accelerations.push([0.0; 3]);
        Kinematics {
            positions: positions.to_vec(),
            velocities,
            accelerations,
        }
    }

    pub fn num_slots(&self) -> usize {
        self.positions.len()
    }

    pub fn linearization(&self) -> LinearizationPoint {
        LinearizationPoint {
            c_ref: self.positions.clone(),
            v_ref: self.velocities.clone(),
        }
    }

    pub fn to_scaled(&self, scenario: &Scenario) -> Vec<f64> {
        let (vm, am) = (scenario.limits.v_max, scenario.limits.a_max);
        let mut x = Vec::with_capacity(VARS_PER_SLOT * self.num_slots());
        for t in 0..self.num_slots() {
            x.extend(self.positions[t].iter().map(|c| c / LENGTH_SCALE));
            x.extend(self.velocities[t].iter().map(|v| v / vm));
            x.extend(self.accelerations[t].iter().map(|a| a / am));
        }
        x
    }

    pub fn from_scaled(scenario: &Scenario, x: &[f64]) -> Self {
        let (vm, am) = (scenario.limits.v_max, scenario.limits.a_max);
        let t_len = x.len() / VARS_PER_SLOT;
        let pick = |t: usize, off: usize, s: f64| -> Vec3 {
            let b = VARS_PER_SLOT * t + off;
            [x[b] * s, x[b + 1] * s, x[b + 2] * s]
        };
        Kinematics {
            positions: (0..t_len).map(|t| pick(t, 0, LENGTH_SCALE)).collect(),
            velocities: (0..t_len).map(|t| pick(t, 3, vm)).collect(),
            accelerations: (0..t_len).map(|t| pick(t, 6, am)).collect(),
        }
    }

    pub fn path_length(&self) -> f64 {
        crate::geometry::path_length(&self.positions)
    }

    /// Removes solver round-off from the pinned start and the altitude box.
    fn snapped(mut self, scenario: &Scenario, start: Vec3) -> Self {
        let lim = &scenario.limits;
        for c in &mut self.positions {
            c[2] = c[2].clamp(lim.z_min, lim.z_max);
        }
        if let Some(c) = self.positions.first_mut() {
            *c = start;
        }
        self
    }
}

/// Affine minorant of `‖x − anchor‖²` expanded at `reference`.
pub fn taylor_lower_bound(reference: Vec3, anchor: Vec3, x: Vec3) -> f64 {
    let d = sub(reference, anchor);
    norm_sq(d) + 2.0 * dot(d, sub(x, reference))
}

/// `max_t P_t·B_{i,t}·(z_min − z_{user,t})^{-ς}`: no position at or above
/// `z_min` can beat this SNR in any slot.
pub fn q_upper_bound(scenario: &Scenario, gains: &LinkGains, powers: &[f64]) -> f64 {
    let exponent = scenario.pathloss.exponent;
    powers
        .iter()
        .enumerate()
        .map(|(t, p)| {
            let h = scenario.limits.z_min - scenario.user_track[t][2];
            p * gains.uav_user[t].b * h.powf(-exponent)
        })
        .fold(0.0, f64::max)
}

fn scaled(c: Vec3) -> Vec3 {
    [c[0] / LENGTH_SCALE, c[1] / LENGTH_SCALE, c[2] / LENGTH_SCALE]
}

/// The linearised feasibility problem at candidate `q`. `q ≤ 0` drops the
/// epigraph rows. The first position is pinned to `start`.
pub fn build_feasibility(
    scenario: &Scenario,
    gains: &LinkGains,
    lin: &LinearizationPoint,
    powers: &[f64],
    q: f64,
    start: Vec3,
) -> ConvexSubproblem {
    let t_len = scenario.num_slots();
    let lim = &scenario.limits;
    let (vm, am, dt) = (lim.v_max, lim.a_max, scenario.dt);
    let exponent = scenario.pathloss.exponent;
    let i0 = scenario.interference_limit_snr();
    let mut p = ConvexSubproblem::new(VARS_PER_SLOT * t_len);

    for t in 0..t_len.saturating_sub(1) {
        for k in 0..3 {
            let v_row = vec![
                (velocity_var(t + 1, k), 1.0),
                (velocity_var(t, k), -1.0),
                (acceleration_var(t, k), -am * dt / vm),
            ];
            let v_tol = lim.delta_v0 / vm;
            p.add_linear(format!("kin_v[{t}][{k}]+"), v_row.clone(), Sense::Le, v_tol);
            p.add_linear(format!("kin_v[{t}][{k}]-"), v_row, Sense::Ge, -v_tol);

            let w = LENGTH_SCALE / (vm * dt);
            let c_row = vec![
                (position_var(t + 1, k), w),
                (position_var(t, k), -w),
                (velocity_var(t, k), -1.0),
                (acceleration_var(t, k), -am * dt / (2.0 * vm)),
            ];
            let c_tol = lim.delta_c0 / (vm * dt);
            p.add_linear(format!("kin_c[{t}][{k}]+"), c_row.clone(), Sense::Le, c_tol);
            p.add_linear(format!("kin_c[{t}][{k}]-"), c_row, Sense::Ge, -c_tol);
        }
    }

    for t in 0..t_len {
        let unit_ball = |var: fn(usize, usize) -> usize| -> Vec<Affine> {
            (0..3).map(|k| Affine::new(vec![(var(t, k), 1.0)], 0.0)).collect()
        };
        p.add_ball(format!("speed[{t}]"), unit_ball(velocity_var), Affine::constant(1.0));
        p.add_ball(format!("accel[{t}]"), unit_ball(acceleration_var), Affine::constant(1.0));

        let mut w = crate::geometry::scale(lin.v_ref[t], 1.0 / vm);
        if norm(w) < 1e-9 {
            w = [0.5 * (lim.v_min + vm) / vm, 0.0, 0.0];
        }
        p.add_linear(
            format!("min_speed[{t}]"),
            (0..3).map(|k| (velocity_var(t, k), 2.0 * w[k])).collect(),
            Sense::Ge,
            (lim.v_min / vm).powi(2) + norm_sq(w),
        );

        p.set_bounds(position_var(t, 2), lim.z_min / LENGTH_SCALE, lim.z_max / LENGTH_SCALE);
    }

    for k in 0..3 {
        p.add_linear(format!("start[{k}]"), vec![(position_var(0, k), 1.0)], Sense::Eq, start[k] / LENGTH_SCALE);
    }

    for t in 0..t_len {
        let power = powers[t];
        let user = scenario.user_track[t];
        if q > 0.0 {
            if power > 0.0 {
                let radius = (gains.uav_user[t].b * power / q).powf(1.0 / exponent);
                let s = LENGTH_SCALE / radius;
                let comps = (0..3)
                    .map(|k| Affine::new(vec![(position_var(t, k), s)], -user[k] / radius))
                    .collect();
                p.add_ball(format!("epigraph[{t}]"), comps, Affine::constant(1.0));
            } else {
                p.add_linear(format!("epigraph[{t}]"), Vec::new(), Sense::Le, -1.0);
            }
        }
        if power <= 0.0 {
            continue;
        }

        let xr = scaled(lin.c_ref[t]);
        let du = sub(xr, scaled(user));
        let norm_u = norm_sq(du);
        let ratio = gains.uav_user[t].b * power / (gains.tbs_uav[t].b * lim.p_s);
        let rho = ratio.powf(2.0 / exponent);
        let s = (rho / norm_u).sqrt();
        let xs = scaled(scenario.tbs_position);
        let comps = (0..3)
            .map(|k| Affine::new(vec![(position_var(t, k), s)], -s * xs[k]))
            .collect();
        let radius = Affine::new(
            (0..3).map(|k| (position_var(t, k), 2.0 * du[k] / norm_u)).collect(),
            (norm_u - 2.0 * dot(du, xr)) / norm_u,
        );
        p.add_ball(format!("backhaul[{t}]"), comps, radius);

        for (j, victim) in scenario.victim_tracks[t].iter().enumerate() {
            let dj = sub(xr, scaled(*victim));
            let r_sq = (gains.uav_victim[t][j].b * power / i0).powf(2.0 / exponent) / (LENGTH_SCALE * LENGTH_SCALE);
            let n = r_sq + norm_sq(dj);
            p.add_linear(
                format!("interference[{t}][{j}]"),
                (0..3).map(|k| (position_var(t, k), 2.0 * dj[k] / n)).collect(),
                Sense::Ge,
                (r_sq - norm_sq(dj) + 2.0 * dot(dj, xr)) / n,
            );
        }
    }
    p
}

/// Worst relative violation of the un-linearised minimum-speed, backhaul and
/// interference constraints by `kin` under `powers`.
pub fn exact_nonconvex_violation(scenario: &Scenario, gains: &LinkGains, kin: &Kinematics, powers: &[f64]) -> f64 {
    let lim = &scenario.limits;
    let exponent = scenario.pathloss.exponent;
    let i0 = scenario.interference_limit_snr();
    let mut worst = f64::NEG_INFINITY;
    for t in 0..kin.num_slots() {
        let c = kin.positions[t];
        worst = worst.max((lim.v_min - norm(kin.velocities[t])) / lim.v_min);
        let p = powers[t];
        if p <= 0.0 {
            continue;
        }
        let user_snr = gains.uav_user[t].b * p * distance(c, scenario.user_track[t]).powf(-exponent);
        let backhaul_snr = gains.tbs_uav[t].b * lim.p_s * distance(c, scenario.tbs_position).powf(-exponent);
        worst = worst.max((user_snr - backhaul_snr) / backhaul_snr);
        for (j, victim) in scenario.victim_tracks[t].iter().enumerate() {
            let interference = gains.uav_victim[t][j].b * p * distance(c, *victim).powf(-exponent);
            worst = worst.max((interference - i0) / i0);
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionOptions {
    /// Stop once `(U − L) ≤ eps·U`.
    pub eps: f64,
    pub max_steps: usize,
    pub solver: SolverOptions,
    /// Re-solve at the final `q` for the feasible point closest to the
    /// users (see [`polish`]) instead of returning the first point found.
    pub polish: bool,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        BisectionOptions {
            eps: 1e-3,
            max_steps: 50,
            solver: SolverOptions::default(),
            polish: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub q: f64,
    pub feasible: bool,
    pub solver_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct BisectionOutcome {
    pub q: f64,
    pub kinematics: Kinematics,
    pub upper0: f64,
    pub lower0: f64,
    /// `(L, U)` after each halving.
    pub brackets: Vec<(f64, f64)>,
    pub probes: Vec<Probe>,
}

impl BisectionOutcome {
    pub fn solver_iterations(&self) -> usize {
        self.probes.iter().map(|p| p.solver_iterations).sum()
    }
}

/// Solve one feasibility problem; `Some` carries the kinematic solution.
#[allow(clippy::too_many_arguments)]
pub fn probe(
    scenario: &Scenario,
    gains: &LinkGains,
    lin: &LinearizationPoint,
    powers: &[f64],
    q: f64,
    start: Vec3,
    hint: &[f64],
    solver: &SolverOptions,
) -> Result<(Option<Kinematics>, SolveResult)> {
    let problem = build_feasibility(scenario, gains, lin, powers, q, start);
    let result = solve_with_hint(&problem, hint, solver)?;
    let kin = result
        .is_optimal()
        .then(|| Kinematics::from_scaled(scenario, &result.x).snapped(scenario, start));
    Ok((kin, result))
}

/// Among the points feasible at `q`, the one minimising
/// `Σ_t ‖c_t − c_{i,t}‖² / R_t²` where `R_t = (B_{i,t}·P_t/q)^{1/ς}` is the
/// epigraph radius. Moving slack slots towards their users lets the next
/// power step shift energy to the binding slots.
#[allow(clippy::too_many_arguments)]
pub fn polish(
    scenario: &Scenario,
    gains: &LinkGains,
    lin: &LinearizationPoint,
    powers: &[f64],
    q: f64,
    start: Vec3,
    hint: &[f64],
    solver: &SolverOptions,
) -> Result<(Option<Kinematics>, SolveResult)> {
    let mut problem = build_feasibility(scenario, gains, lin, powers, q, start);
    let t_len = scenario.num_slots();
    let base = problem.n_vars;
    let exponent = scenario.pathloss.exponent;
    problem.n_vars += t_len;
    problem.objective.resize(base + t_len, -1.0 / t_len as f64);
    problem.lower.resize(base + t_len, 0.0);
    problem.upper.resize(base + t_len, f64::INFINITY);
    let mut x0 = hint.to_vec();
    for t in 0..t_len {
        let user = scenario.user_track[t];
        let radius = (gains.uav_user[t].b * powers[t] / q).powf(1.0 / exponent);
        if !(radius > 0.0 && radius.is_finite()) {
            x0.push(1.0);
            continue;
        }
        let s = LENGTH_SCALE / radius;
        let comps = (0..3)
            .map(|k| Affine::new(vec![(position_var(t, k), s)], -user[k] / radius))
            .collect();
        problem.add_ball(format!("distance[{t}]"), comps, Affine::new(vec![(base + t, 1.0)], 0.0));
        let c = [hint[position_var(t, 0)], hint[position_var(t, 1)], hint[position_var(t, 2)]];
        x0.push(norm_sq(sub(crate::geometry::scale(c, LENGTH_SCALE), user)) / (radius * radius));
    }
    let result = solve_with_hint(&problem, &x0, solver)?;
    let kin = result
        .is_optimal()
        .then(|| Kinematics::from_scaled(scenario, &result.x[..base]).snapped(scenario, start));
    Ok((kin, result))
}

/// Largest `q` in `[L0, U0]` (within relative gap `eps`) for which the
/// linearised problem is feasible. When `reference` is feasible at its own
/// `q` it seeds the lower end of the bracket; otherwise `L0 = 0`.
pub fn bisect_q(
    scenario: &Scenario,
    gains: &LinkGains,
    lin: &LinearizationPoint,
    powers: &[f64],
    start: Vec3,
    reference: Option<(f64, &Kinematics)>,
    options: &BisectionOptions,
) -> Result<BisectionOutcome> {
    bisect_q_observed(scenario, gains, lin, powers, start, reference, options, &mut |_, _| Ok(()))
}

/// [`bisect_q`] that also reports every feasible probe to `on_feasible`.
#[allow(clippy::too_many_arguments)]
pub fn bisect_q_observed(
    scenario: &Scenario,
    gains: &LinkGains,
    lin: &LinearizationPoint,
    powers: &[f64],
    start: Vec3,
    reference: Option<(f64, &Kinematics)>,
    options: &BisectionOptions,
    on_feasible: &mut dyn FnMut(f64, &Kinematics) -> Result<()>,
) -> Result<BisectionOutcome> {
    let mut upper = q_upper_bound(scenario, gains, powers);
    let mut probes = Vec::new();

    let seeded = reference.and_then(|(q_ref, kin)| {
        let x = kin.to_scaled(scenario);
        let problem = build_feasibility(scenario, gains, lin, powers, q_ref, start);
        (check_feasible(&problem, &x) <= options.solver.feas_tol).then(|| (q_ref, kin.clone()))
    });
    let (mut lower, mut best) = match seeded {
        Some(s) => s,
        None => {
            let hint = reference
                .map(|(_, k)| k.to_scaled(scenario))
                .unwrap_or_else(|| Kinematics::from_positions(&lin.c_ref, scenario.dt, scenario.limits.v_min, scenario.limits.v_max).to_scaled(scenario));
            let (kin, res) = probe(scenario, gains, lin, powers, 0.0, start, &hint, &options.solver)?;
            probes.push(Probe {
                q: 0.0,
                feasible: kin.is_some(),
                solver_iterations: res.iterations,
            });
            match kin {
                Some(k) => {
                    on_feasible(0.0, &k)?;
                    (0.0, k)
                }
                None => {
                    let worst = build_feasibility(scenario, gains, lin, powers, 0.0, start)
                        .worst_row(&res.x)
                        .map(|(l, _)| l)
                        .unwrap_or_default();
                    return Err(Error::Infeasible(format!(
                        "kinematic constraints cannot be met (phase-I value {:e}, worst row `{worst}`)",
                        res.phase1_value
                    )));
                }
            }
        }
    };
    upper = upper.max(lower);
    let (lower0, upper0) = (lower, upper);
    let mut brackets = Vec::new();
    for _ in 0..options.max_steps {
        if upper - lower <= options.eps * upper {
            break;
        }
        let mid = 0.5 * (lower + upper);
        let hint = best.to_scaled(scenario);
        let (kin, res) = probe(scenario, gains, lin, powers, mid, start, &hint, &options.solver)?;
        probes.push(Probe {
            q: mid,
            feasible: kin.is_some(),
            solver_iterations: res.iterations,
        });
        match kin {
            Some(k) => {
                on_feasible(mid, &k)?;
                lower = mid;
                best = k;
            }
            None => upper = mid,
        }
        brackets.push((lower, upper));
    }
    if options.polish && lower > 0.0 {
        let hint = best.to_scaled(scenario);
        let (kin, res) = polish(scenario, gains, lin, powers, lower, start, &hint, &options.solver)?;
        probes.push(Probe {
            q: lower,
            feasible: kin.is_some(),
            solver_iterations: res.iterations,
        });
        match kin {
            Some(k) => best = k,
            None => log::debug!("polish at q = {lower:e} ended with {:?}; keeping the bisection point", res.status),
        }
    }
    Ok(BisectionOutcome {
        q: lower,
        kinematics: best,
        upper0,
        lower0,
        brackets,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::paper_scenario;

    #[test]
    fn minorant_is_exact_at_reference() {
        let r = [1.0, -2.0, 3.5];
        let a = [0.5, 4.0, -1.0];
        assert_eq!(taylor_lower_bound(r, a, r), norm_sq(sub(r, a)));
    }

    #[test]
    fn finite_difference_kinematics_of_uniform_track() {
        let pos: Vec<Vec3> = (0..4).map(|i| [1000.0 * i as f64, 0.0, 3000.0]).collect();
        let kin = Kinematics::from_positions(&pos, 50.0, 10.0, 60.0);
        assert!(kin.velocities.iter().all(|v| *v == [20.0, 0.0, 0.0]));
        assert!(kin.accelerations.iter().all(|a| *a == [0.0; 3]));
    }

    #[test]
    fn scaled_round_trip() {
        let s = paper_scenario();
        let pos: Vec<Vec3> = s.user_track.iter().map(|c| [c[0] / 2.0, c[1], s.limits.z_min]).collect();
        let kin = Kinematics::from_positions(&pos, s.dt, s.limits.v_min, s.limits.v_max);
        let back = Kinematics::from_scaled(&s, &kin.to_scaled(&s));
        for t in 0..kin.num_slots() {
            for k in 0..3 {
                assert!((back.positions[t][k] - kin.positions[t][k]).abs() < 1e-9);
                assert!((back.velocities[t][k] - kin.velocities[t][k]).abs() < 1e-12);
            }
        }
    }
}
