//! Outer successive convex approximation loop.
//!
//! In the default decoupled mode each outer iteration moves the trajectory
//! by bisection (powers frozen) and then re-solves the power LP (trajectory
//! frozen). `Q^0` is the power-LP value at the initial trajectory and `Q^l`
//! the power-LP value after the `l`-th trajectory move. The loop stops once
//! `|Q^l − Q^{l−1}| < ε·Q^l`.
//!
//! In joint mode the power LP is re-solved at every feasible bisection probe
//! and the best (trajectory, power) pair seen is kept.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ergodic_rate, LinkGains};
use crate::convex::{check_feasible, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{distance, norm, path_length, sub, Vec3};
use crate::power::{min_snr, solve_power};
use crate::scenario::Scenario;
use crate::trajectory::{bisect_q, bisect_q_observed, build_feasibility, BisectionOptions, BisectionOutcome, Kinematics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Decoupled,
    Joint,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decoupled" => Ok(Mode::Decoupled),
            "joint" => Ok(Mode::Joint),
            other => Err(Error::InvalidArgument {
                name: "mode",
                reason: format!("expected `decoupled` or `joint`, got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Decoupled => "decoupled",
            Mode::Joint => "joint",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    pub eps: f64,
    pub max_iterations: usize,
    pub mode: Mode,
    pub bisection_eps: f64,
    pub bisection_steps: usize,
    pub solver: SolverOptions,
    pub audit_tolerance: f64,
    /// See [`crate::trajectory::polish`].
    pub polish: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            eps: 1e-3,
            max_iterations: 50,
            mode: Mode::Decoupled,
            bisection_eps: 1e-3,
            bisection_steps: 50,
            solver: SolverOptions::default(),
            audit_tolerance: 1e-6,
            polish: true,
        }
    }
}

impl PlanOptions {
    fn bisection(&self) -> BisectionOptions {
        BisectionOptions {
            eps: self.bisection_eps,
            max_steps: self.bisection_steps,
            solver: self.solver,
            polish: self.polish,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub l: usize,
    pub q_after_trajectory: f64,
    pub q_after_power: f64,
    pub bisection_probes: usize,
    pub solver_iterations: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationTrace {
    /// `Q^0`: the power-LP value at the initial trajectory.
    pub initial_q: f64,
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    /// `Q^0, Q^1, …`.
    pub fn q_sequence(&self) -> Vec<f64> {
        std::iter::once(self.initial_q)
            .chain(self.records.iter().map(|r| r.q_after_power))
            .collect()
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Error if some `Q^l < Q^{l−1}·(1 − rel_tol)`.
    pub fn check_monotone(&self, rel_tol: f64) -> Result<()> {
        let q = self.q_sequence();
        for (l, w) in q.windows(2).enumerate() {
            if w[1] < w[0] * (1.0 - rel_tol) {
                return Err(Error::NonMonotone {
                    iteration: l + 1,
                    previous: w[0],
                    current: w[1],
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightPlan {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub accelerations: Vec<Vec3>,
    /// Watts.
    pub powers: Vec<f64>,
    pub q_value: f64,
}

impl FlightPlan {
    fn new(kin: &Kinematics, powers: Vec<f64>, q_value: f64) -> Self {
        FlightPlan {
            positions: kin.positions.clone(),
            velocities: kin.velocities.clone(),
            accelerations: kin.accelerations.clone(),
            powers,
            q_value,
        }
    }

    pub fn kinematics(&self) -> Kinematics {
        Kinematics {
            positions: self.positions.clone(),
            velocities: self.velocities.clone(),
            accelerations: self.accelerations.clone(),
        }
    }

    pub fn num_slots(&self) -> usize {
        self.positions.len()
    }

    pub fn total_energy(&self, dt: f64) -> f64 {
        self.powers.iter().sum::<f64>() * dt
    }

    pub fn path_length(&self) -> f64 {
        path_length(&self.positions)
    }

    pub fn average_snr(&self, scenario: &Scenario) -> Vec<f64> {
        let gains = LinkGains::new(scenario);
        let exponent = scenario.pathloss.exponent;
        (0..self.num_slots())
            .map(|t| {
                self.powers[t] * gains.uav_user[t].b * distance(self.positions[t], scenario.user_track[t]).powf(-exponent)
            })
            .collect()
    }

    pub fn ergodic_rates(&self, scenario: &Scenario) -> Result<Vec<f64>> {
        self.average_snr(scenario)
            .into_iter()
            .map(|a| ergodic_rate(a, scenario.rician_k))
            .collect()
    }

    pub fn min_ergodic_rate(&self, scenario: &Scenario) -> Result<f64> {
        Ok(self.ergodic_rates(scenario)?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Smallest distance to any victim over all slots.
    pub fn min_victim_distance(&self, scenario: &Scenario) -> f64 {
        self.positions
            .iter()
            .zip(&scenario.victim_tracks)
            .flat_map(|(c, victims)| victims.iter().map(move |v| distance(*c, *v)))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditCheck {
    pub name: &'static str,
    pub slot: Option<usize>,
    /// Relative residual; positive means violated.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub tolerance: f64,
    /// The worst residual of each constraint family.
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.residual <= self.tolerance)
    }

    pub fn failures(&self) -> Vec<&AuditCheck> {
        self.checks.iter().filter(|c| c.residual > self.tolerance).collect()
    }

    pub fn worst(&self) -> Option<&AuditCheck> {
        self.checks.iter().max_by(|a, b| a.residual.total_cmp(&b.residual))
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Worst {
    checks: Vec<AuditCheck>,
}

impl Worst {
    fn record(&mut self, name: &'static str, slot: Option<usize>, residual: f64) {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        match self.checks.iter_mut().find(|c| c.name == name) {
            Some(c) if c.residual >= residual => {}
            Some(c) => {
                c.slot = slot;
                c.residual = residual;
            }
            None => self.checks.push(AuditCheck { name, slot, residual }),
        }
    }
}

/// Check a plan against the original (un-linearised) constraints. Residuals
/// are relative to the limit they are measured against.
pub fn audit(scenario: &Scenario, plan: &FlightPlan, start: Vec3, tolerance: f64) -> Result<AuditReport> {
    let lim = &scenario.limits;
    let gains = LinkGains::new(scenario);
    let exponent = scenario.pathloss.exponent;
    let k = scenario.rician_k;
    let mut w = Worst { checks: Vec::new() };
    let t_len = plan.num_slots();

    w.record("start", Some(0), norm(sub(plan.positions[0], start)) / norm(start).max(1.0));
    for t in 0..t_len {
        let c = plan.positions[t];
        let speed = norm(plan.velocities[t]);
        w.record("altitude_min", Some(t), (lim.z_min - c[2]) / lim.z_min);
        w.record("altitude_max", Some(t), (c[2] - lim.z_max) / lim.z_max);
        w.record("speed_max", Some(t), (speed - lim.v_max) / lim.v_max);
        w.record("speed_min", Some(t), (lim.v_min - speed) / lim.v_min);
        w.record("acceleration", Some(t), (norm(plan.accelerations[t]) - lim.a_max) / lim.a_max);
        if t + 1 < t_len {
            let (v, a) = (plan.velocities[t], plan.accelerations[t]);
            let mut dv: f64 = 0.0;
            let mut dc: f64 = 0.0;
            for i in 0..3 {
                dv = dv.max((plan.velocities[t + 1][i] - v[i] - a[i] * scenario.dt).abs());
                let pred = c[i] + v[i] * scenario.dt + 0.5 * a[i] * scenario.dt * scenario.dt;
                dc = dc.max((plan.positions[t + 1][i] - pred).abs());
            }
            w.record("kinematic_velocity", Some(t), (dv - lim.delta_v0) / lim.delta_v0);
            w.record("kinematic_position", Some(t), (dc - lim.delta_c0) / lim.delta_c0);
        }
        let p = plan.powers[t];
        w.record("power_max", Some(t), (p - lim.p_max) / lim.p_max);
        w.record("power_min", Some(t), -p / lim.p_max);

        for (j, victim) in scenario.victim_tracks[t].iter().enumerate() {
            let received_watts = gains.uav_victim[t][j].b * scenario.noise_power * p * distance(c, *victim).powf(-exponent);
            w.record("interference", Some(t), (received_watts - lim.i0) / lim.i0);
        }
        let user_snr = p * gains.uav_user[t].b * distance(c, scenario.user_track[t]).powf(-exponent);
        let backhaul_snr = lim.p_s * gains.tbs_uav[t].b * distance(c, scenario.tbs_position).powf(-exponent);
        let r_user = ergodic_rate(user_snr, k)?;
        let r_backhaul = ergodic_rate(backhaul_snr, k)?;
        w.record("backhaul", Some(t), (r_user - r_backhaul) / r_backhaul);
    }
    w.record("energy", None, (plan.total_energy(scenario.dt) - lim.e0) / lim.e0);
    Ok(AuditReport {
        tolerance,
        checks: w.checks,
    })
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub plan: FlightPlan,
    pub trace: IterationTrace,
    pub audit: AuditReport,
    pub converged: bool,
}

fn validate_init(scenario: &Scenario, kin: &Kinematics) -> Result<()> {
    let t_len = scenario.num_slots();
    if kin.num_slots() != t_len || kin.velocities.len() != t_len || kin.accelerations.len() != t_len {
        return Err(Error::InvalidArgument {
            name: "init",
            reason: format!("expected {t_len} slots, got {}", kin.num_slots()),
        });
    }
    let lim = &scenario.limits;
    for (t, c) in kin.positions.iter().enumerate() {
        if !crate::geometry::is_finite(*c) {
            return Err(Error::InvalidArgument {
                name: "init",
                reason: format!("slot {t} has a non-finite position"),
            });
        }
        let slack = 1e-9 * lim.z_max;
        if c[2] < lim.z_min - slack || c[2] > lim.z_max + slack {
            return Err(Error::Infeasible(format!(
                "initial trajectory violates the altitude box at slot {t} (z = {} m, allowed [{}, {}])",
                c[2], lim.z_min, lim.z_max
            )));
        }
    }
    Ok(())
}

/// Run the planner from an initial trajectory given by positions only.
pub fn plan(scenario: &Scenario, init: &[Vec3], options: &PlanOptions) -> Result<PlanOutcome> {
    let kin = Kinematics::from_positions(init, scenario.dt, scenario.limits.v_min, scenario.limits.v_max);
    plan_from_kinematics(scenario, &kin, options)
}

/// Run the planner from full initial kinematics (e.g. a previous plan).
pub fn plan_from_kinematics(scenario: &Scenario, init: &Kinematics, options: &PlanOptions) -> Result<PlanOutcome> {
    scenario.validate()?;
    if !(options.eps > 0.0) {
        return Err(Error::InvalidArgument {
            name: "eps",
            reason: format!("must be positive, got {}", options.eps),
        });
    }
    validate_init(scenario, init)?;
    let gains = LinkGains::new(scenario);
    let start = init.positions[0];
    let solver = options.solver;

    let mut kin = init.clone();
    let mut first = solve_power(scenario, &gains, &kin.positions, &solver)?;
    let problem = build_feasibility(scenario, &gains, &kin.linearization(), &first.powers, 0.0, start);
    if check_feasible(&problem, &kin.to_scaled(scenario)) > solver.feas_tol {
        log::warn!("initial trajectory violates the flight limits; replacing it with a feasible one");
        let repaired = bisect_q(scenario, &gains, &kin.linearization(), &first.powers, start, None, &options.bisection())?;
        kin = repaired.kinematics;
        first = solve_power(scenario, &gains, &kin.positions, &solver)?;
    }
    let mut powers = first.powers;
    let mut q_prev = first.q;
    let mut trace = IterationTrace {
        initial_q: q_prev,
        records: Vec::new(),
    };
    let mut converged = false;

    for l in 1..=options.max_iterations {
        let clock = Instant::now();
        let lin = kin.linearization();
        let (q_traj, kin_new, powers_new, q_new, bis) = match options.mode {
            Mode::Decoupled => {
                let bis = bisect_q(scenario, &gains, &lin, &powers, start, Some((q_prev, &kin)), &options.bisection())?;
                let (kin_moved, q_traj) = if bis.q >= q_prev {
                    (bis.kinematics.clone(), bis.q)
                } else {
                    log::warn!("bisection at iteration {l} fell below the reference value; keeping the previous trajectory");
                    (kin.clone(), q_prev)
                };
                let moved = solve_power(scenario, &gains, &kin_moved.positions, &solver)?;
                let kept = min_snr(scenario, &gains, &kin_moved.positions, &powers);
                let (p, q) = if moved.q >= kept { (moved.powers, moved.q) } else { (powers.clone(), kept) };
                (q_traj, kin_moved, p, q, bis)
            }
            Mode::Joint => {
                let mut best: Option<(f64, Kinematics, Vec<f64>)> = None;
                let mut observe = |_: f64, k: &Kinematics| -> Result<()> {
                    let sol = solve_power(scenario, &gains, &k.positions, &solver)?;
                    if best.as_ref().is_none_or(|(q, _, _)| sol.q > *q) {
                        best = Some((sol.q, k.clone(), sol.powers));
                    }
                    Ok(())
                };
                let bis = bisect_q_observed(
                    scenario,
                    &gains,
                    &lin,
                    &powers,
                    start,
                    Some((q_prev, &kin)),
                    &options.bisection(),
                    &mut observe,
                )?;
                let q_traj = bis.q;
                match best {
                    Some((q, k, p)) if q >= q_prev => (q_traj, k, p, q, bis),
                    _ => (q_traj.max(q_prev), kin.clone(), powers.clone(), q_prev, bis),
                }
            }
        };

        let (kin_next, powers_next, q_next) = if q_new >= q_prev {
            (kin_new, powers_new, q_new)
        } else {
            if q_new < q_prev * (1.0 - 10.0 * solver.feas_tol) {
                log::warn!("outer iteration {l} decreased Q from {q_prev:e} to {q_new:e}; keeping the previous plan");
            }
            (kin.clone(), powers.clone(), q_prev)
        };
        trace.records.push(record(l, q_traj, q_next, &bis, clock.elapsed()));
        log::debug!("iteration {l}: Q after trajectory {q_traj:e}, after power {q_next:e}");

        let change = (q_next - q_prev).abs();
        kin = kin_next;
        powers = powers_next;
        q_prev = q_next;
        if change <= options.eps * q_next.abs() {
            converged = true;
            break;
        }
    }
    trace.check_monotone(10.0 * solver.feas_tol)?;

    let plan = FlightPlan::new(&kin, powers, q_prev);
    let audit = audit(scenario, &plan, start, options.audit_tolerance)?;
    Ok(PlanOutcome {
        plan,
        trace,
        audit,
        converged,
    })
}

fn record(l: usize, q_traj: f64, q_power: f64, bis: &BisectionOutcome, wall_time: Duration) -> IterationRecord {
    IterationRecord {
        l,
        q_after_trajectory: q_traj,
        q_after_power: q_power,
        bisection_probes: bis.probes.len(),
        solver_iterations: bis.solver_iterations(),
        wall_time,
    }
}

/// The three reference initial trajectories, all at `z_min`: directly above
/// the user, three quarters of the way from the base station to the user,
/// and halfway. Only the x coordinate is interpolated.
pub fn default_initializations(scenario: &Scenario) -> Vec<(&'static str, Vec<Vec3>)> {
    let x_s = scenario.tbs_position[0];
    let z = scenario.limits.z_min;
    let at = |f: f64| -> Vec<Vec3> {
        scenario
            .user_track
            .iter()
            .map(|c| [x_s + f * (c[0] - x_s), c[1], z])
            .collect()
    };
    vec![("above-user", at(1.0)), ("three-quarter", at(0.75)), ("midpoint", at(0.5))]
}

/// Initial trajectory by name (`above-user`, `three-quarter`, `midpoint`).
pub fn named_initialization(scenario: &Scenario, name: &str) -> Result<Vec<Vec3>> {
    default_initializations(scenario)
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, c)| c)
        .ok_or_else(|| Error::InvalidArgument {
            name: "init",
            reason: format!("unknown initialization `{name}`"),
        })
}

/// Index of the preferred plan: largest `Q`, then smallest energy, then
/// shortest path. `Q` values within a relative `1e-9` count as equal.
pub fn select_best<'a, I>(scenario: &Scenario, plans: I) -> Option<usize>
where
    I: IntoIterator<Item = &'a FlightPlan>,
{
    let mut best: Option<(usize, &FlightPlan)> = None;
    for (i, p) in plans.into_iter().enumerate() {
        best = match best {
            None => Some((i, p)),
            Some((bi, b)) => {
                if prefer(scenario, p, b) {
                    Some((i, p))
                } else {
                    Some((bi, b))
                }
            }
        };
    }
    best.map(|(i, _)| i)
}

fn prefer(scenario: &Scenario, a: &FlightPlan, b: &FlightPlan) -> bool {
    let scale = a.q_value.abs().max(b.q_value.abs());
    if (a.q_value - b.q_value).abs() > 1e-9 * scale {
        return a.q_value > b.q_value;
    }
    let (ea, eb) = (a.total_energy(scenario.dt), b.total_energy(scenario.dt));
    if ea != eb {
        return ea < eb;
    }
    a.path_length() < b.path_length()
}

/// Run every default initialization in parallel and keep the preferred
/// outcome. Initializations that fail are skipped; the error of the first
/// one is returned if none succeeds.
pub fn plan_best(scenario: &Scenario, options: &PlanOptions) -> Result<(&'static str, PlanOutcome)> {
    let inits = default_initializations(scenario);
    let results: Vec<(&'static str, Result<PlanOutcome>)> = inits
        .par_iter()
        .map(|(name, init)| (*name, plan(scenario, init, options)))
        .collect();
    pick(scenario, results)
}

pub(crate) fn pick(
    scenario: &Scenario,
    results: Vec<(&'static str, Result<PlanOutcome>)>,
) -> Result<(&'static str, PlanOutcome)> {
    let mut ok = Vec::new();
    let mut first_err = None;
    for (name, r) in results {
        match r {
            Ok(o) => ok.push((name, o)),
            Err(e) => {
                log::warn!("initialization `{name}` failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match select_best(scenario, ok.iter().map(|(_, o)| &o.plan)) {
        Some(i) => Ok(ok.swap_remove(i)),
        None => Err(first_err.unwrap_or_else(|| Error::Infeasible("no initialization produced a plan".into()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::paper_scenario;

    #[test]
    fn midpoint_init_halves_x() {
        let s = paper_scenario();
        let init = named_initialization(&s, "midpoint").unwrap();
        for (c, u) in init.iter().zip(&s.user_track) {
            assert_eq!(c[0], u[0] / 2.0);
            assert_eq!(c[1], u[1]);
            assert_eq!(c[2], s.limits.z_min);
        }
    }

    #[test]
    fn mode_parses() {
        assert_eq!("joint".parse::<Mode>().unwrap(), Mode::Joint);
        assert!("both".parse::<Mode>().is_err());
    }

    #[test]
    fn rejects_init_below_floor() {
        let s = paper_scenario();
        let mut init = named_initialization(&s, "midpoint").unwrap();
        init[4][2] = s.limits.z_min - 1.0;
        let err = plan(&s, &init, &PlanOptions::default()).unwrap_err();
        assert!(err.to_string().contains("slot 4"), "{err}");
    }

    #[test]
    fn trace_monotone_check() {
        let trace = IterationTrace {
            initial_q: 1.0,
            records: vec![IterationRecord {
                l: 1,
                q_after_trajectory: 1.0,
                q_after_power: 0.9,
                bisection_probes: 0,
                solver_iterations: 0,
                wall_time: Duration::ZERO,
            }],
        };
        assert!(matches!(trace.check_monotone(1e-7), Err(Error::NonMonotone { .. })));
    }
}
