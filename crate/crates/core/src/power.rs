//! Per-slot transmit power allocation with the trajectory frozen.
//!
//! With positions fixed, every constraint of the max-min problem is linear
//! in `(P_1, …, P_T, Q)`. Variables are scaled to `P/P_max` and `Q/q_scale`
//! where `q_scale` is the largest per-slot SNR reachable at full power, so the
//! LP is well conditioned regardless of the physical units.

use crate::channel::LinkGains;
use crate::convex::{solve, ConvexSubproblem, Sense, SolveResult, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{distance, Vec3};
use crate::scenario::Scenario;

/// The power LP together with the scaling needed to read its solution.
#[derive(Debug, Clone)]
pub struct PowerLp {
    pub problem: ConvexSubproblem,
    pub p_scale: f64,
    pub q_scale: f64,
    /// `B_i·d^{-ς}` per slot: average SNR per watt.
    pub snr_per_watt: Vec<f64>,
    /// Tightest of the backhaul and interference caps per slot, in watts.
    pub caps: Vec<f64>,
    pub energy_budget: f64,
    pub dt: f64,
}

impl PowerLp {
    pub fn num_slots(&self) -> usize {
        self.snr_per_watt.len()
    }

    /// Physical powers in watts, pulled back onto the exact constraint set
    /// so that solver tolerance never leaks into the plan.
    pub fn powers(&self, x: &[f64]) -> Vec<f64> {
        let mut p: Vec<f64> = x[..self.num_slots()]
            .iter()
            .zip(&self.caps)
            .map(|(p, cap)| (p * self.p_scale).clamp(0.0, self.p_scale.min(*cap)))
            .collect();
        let energy: f64 = p.iter().sum::<f64>() * self.dt;
        if energy > self.energy_budget {
            let f = self.energy_budget / energy;
            p.iter_mut().for_each(|v| *v *= f);
        }
        p
    }
}

#[derive(Debug, Clone)]
pub struct PowerSolution {
    pub powers: Vec<f64>,
    /// `min_t P_t·B_{i,t}·d_t^{-ς}`.
    pub q: f64,
    pub solve: SolveResult,
}

/// `min_t P_t·B_{i,t}·d_{ui,t}^{-ς}` for the given positions and powers.
pub fn min_snr(scenario: &Scenario, gains: &LinkGains, positions: &[Vec3], powers: &[f64]) -> f64 {
    let exponent = scenario.pathloss.exponent;
    positions
        .iter()
        .zip(powers)
        .enumerate()
        .map(|(t, (c, p))| p * gains.uav_user[t].b * distance(*c, scenario.user_track[t]).powf(-exponent))
        .fold(f64::INFINITY, f64::min)
}

fn checked_distance(a: Vec3, b: Vec3, what: &str, slot: usize) -> Result<f64> {
    let d = distance(a, b);
    if d > 0.0 && d.is_finite() {
        Ok(d)
    } else {
        Err(Error::DegenerateGeometry(format!("UAV coincides with the {what} at slot {slot}")))
    }
}

pub fn build_power_lp(scenario: &Scenario, gains: &LinkGains, positions: &[Vec3]) -> Result<PowerLp> {
    let t_len = scenario.num_slots();
    if positions.len() != t_len {
        return Err(Error::InvalidArgument {
            name: "positions",
            reason: format!("expected {t_len} slots, got {}", positions.len()),
        });
    }
    let lim = &scenario.limits;
    let exponent = scenario.pathloss.exponent;
    let p_max = lim.p_max;
    let i0 = scenario.interference_limit_snr();

    let mut snr_per_watt = Vec::with_capacity(t_len);
    let mut caps = Vec::with_capacity(t_len);
    for (t, c) in positions.iter().enumerate() {
        let d = checked_distance(*c, scenario.user_track[t], "served user", t)?;
        snr_per_watt.push(gains.uav_user[t].b * d.powf(-exponent));
    }
    let q_scale = snr_per_watt.iter().fold(0.0_f64, |m, g| m.max(g * p_max));

    let q_var = t_len;
    let mut lp = ConvexSubproblem::new(t_len + 1);
    lp.objective[q_var] = 1.0;
    for t in 0..t_len {
        lp.set_bounds(t, 0.0, 1.0);
    }
    lp.set_bounds(q_var, 0.0, f64::INFINITY);

    for (t, c) in positions.iter().enumerate() {
        let g = snr_per_watt[t];
        lp.add_linear(format!("epigraph[{t}]"), vec![(q_var, 1.0), (t, -g * p_max / q_scale)], Sense::Le, 0.0);

        let d_s = checked_distance(*c, scenario.tbs_position, "base station", t)?;
        let backhaul_snr = gains.tbs_uav[t].b * lim.p_s * d_s.powf(-exponent);
        lp.add_linear(format!("backhaul[{t}]"), vec![(t, 1.0)], Sense::Le, backhaul_snr / (g * p_max));
        let mut cap = backhaul_snr / g;

        for (j, victim) in scenario.victim_tracks[t].iter().enumerate() {
            let d_j = checked_distance(*c, *victim, "victim user", t)?;
            let watts = i0 * d_j.powf(exponent) / gains.uav_victim[t][j].b;
            lp.add_linear(format!("interference[{t}][{j}]"), vec![(t, 1.0)], Sense::Le, watts / p_max);
            cap = cap.min(watts);
        }
        caps.push(cap);
    }
    let per_slot_budget = lim.e0 / (scenario.dt * p_max * t_len as f64);
    let inv_t = 1.0 / t_len as f64;
    lp.add_linear("energy", (0..t_len).map(|t| (t, inv_t)).collect(), Sense::Le, per_slot_budget);

    Ok(PowerLp {
        problem: lp,
        p_scale: p_max,
        q_scale,
        snr_per_watt,
        caps,
        energy_budget: lim.e0,
        dt: scenario.dt,
    })
}

pub fn solve_power(scenario: &Scenario, gains: &LinkGains, positions: &[Vec3], options: &SolverOptions) -> Result<PowerSolution> {
    let lp = build_power_lp(scenario, gains, positions)?;
    let result = solve(&lp.problem, options)?;
    if !result.is_optimal() {
        return Err(Error::Solver(format!(
            "power LP ended with status {:?} (phase-I value {:e})",
            result.status, result.phase1_value
        )));
    }
    let powers = lp.powers(&result.x);
    let q = powers
        .iter()
        .zip(&lp.snr_per_watt)
        .map(|(p, g)| p * g)
        .fold(f64::INFINITY, f64::min);
    Ok(PowerSolution { powers, q, solve: result })
}

/// `Q^{2/ς}·d² ≤ (B·P)^{2/ς}`.
pub fn epigraph_power_form(q: f64, p: f64, d: f64, b: f64, exponent: f64) -> bool {
    let e = 2.0 / exponent;
    q.powf(e) * d * d <= (b * p).powf(e)
}

/// `Q·d^ς ≤ B·P`.
pub fn epigraph_linear_form(q: f64, p: f64, d: f64, b: f64, exponent: f64) -> bool {
    q * d.powf(exponent) <= b * p
}
