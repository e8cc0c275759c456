//! Parameter sweeps.
//!
//! Every point is first planned from the default initializations in
//! parallel. A sequential pass then re-plans each point warm-started from
//! the previous point's plan and keeps whichever result [`select_best`]
//! prefers. When a parameter only relaxes constraints (ascending `P_max`,
//! `E₀` or `I₀`) the previous plan stays feasible, so the swept `Q` cannot
//! drop from one point to the next.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sca::{plan_best, plan_from_kinematics, select_best, PlanOptions, PlanOutcome};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Peak UAV power, dBm.
    PMax,
    /// Energy budget, J.
    E0,
    /// Interference limit, dBm.
    I0,
    /// Rician factor, linear.
    K,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::PMax => "p_max",
            SweepAxis::E0 => "e0",
            SweepAxis::I0 => "i0",
            SweepAxis::K => "k",
        }
    }

    pub fn apply(&self, scenario: &Scenario, value: f64) -> Result<Scenario> {
        let s = scenario.clone();
        match self {
            SweepAxis::PMax => s.with_p_max_dbm(value),
            SweepAxis::E0 => s.with_e0(value),
            SweepAxis::I0 => s.with_i0_dbm(value),
            SweepAxis::K => s.with_rician_k(value),
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p_max" => Ok(SweepAxis::PMax),
            "e0" => Ok(SweepAxis::E0),
            "i0" => Ok(SweepAxis::I0),
            "k" => Ok(SweepAxis::K),
            other => Err(Error::InvalidArgument {
                name: "axis",
                reason: format!("expected one of p_max, e0, i0, k; got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `start, start + step, …` up to and including `stop` (with a relative
/// allowance of `1e-9` steps for rounding).
pub fn inclusive_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::InvalidArgument {
            name: "range",
            reason: format!("need start ≤ stop and step > 0, got {start}..{stop} step {step}"),
        });
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    /// Which start produced the kept plan (an initialization name or
    /// `continuation`).
    pub origin: &'static str,
    pub outcome: PlanOutcome,
    pub min_ergodic_rate: f64,
}

#[derive(Debug)]
pub struct SweepRow {
    pub value: f64,
    pub result: Result<SweepPoint>,
}

impl SweepRow {
    pub fn point(&self) -> Option<&SweepPoint> {
        self.result.as_ref().ok()
    }
}

fn finish(scenario: &Scenario, value: f64, origin: &'static str, outcome: PlanOutcome) -> Result<SweepPoint> {
    let min_ergodic_rate = outcome.plan.min_ergodic_rate(scenario)?;
    Ok(SweepPoint {
        value,
        origin,
        outcome,
        min_ergodic_rate,
    })
}

pub fn run_sweep(scenario: &Scenario, axis: SweepAxis, values: &[f64], options: &PlanOptions) -> Vec<SweepRow> {
    let cold: Vec<(Result<Scenario>, Option<Result<(&'static str, PlanOutcome)>>)> = values
        .par_iter()
        .map(|&v| {
            let s = axis.apply(scenario, v);
            let r = s.as_ref().ok().map(|s| plan_best(s, options));
            (s, r)
        })
        .collect();

    let mut rows: Vec<SweepRow> = Vec::with_capacity(values.len());
    for (&value, (s, cold)) in values.iter().zip(cold) {
        let s = match s {
            Ok(s) => s,
            Err(e) => {
                rows.push(SweepRow { value, result: Err(e) });
                continue;
            }
        };
        let warm = rows
            .last()
            .and_then(|r| r.point())
            .map(|prev| plan_from_kinematics(&s, &prev.outcome.plan.kinematics(), options));
        let mut candidates: Vec<(&'static str, PlanOutcome)> = Vec::new();
        let mut error = None;
        match cold {
            Some(Ok(c)) => candidates.push(c),
            Some(Err(e)) => error = Some(e),
            None => {}
        }
        match warm {
            Some(Ok(w)) => candidates.push(("continuation", w)),
            Some(Err(e)) => log::warn!("continuation at {axis} = {value} failed: {e}"),
            None => {}
        }
        let result = match select_best(&s, candidates.iter().map(|(_, o)| &o.plan)) {
            Some(i) => {
                let (origin, outcome) = candidates.swap_remove(i);
                finish(&s, value, origin, outcome)
            }
            None => Err(error.unwrap_or_else(|| Error::Infeasible(format!("no plan at {axis} = {value}")))),
        };
        rows.push(SweepRow { value, result });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_is_inclusive() {
        let r = inclusive_range(22.0, 40.0, 2.0).unwrap();
        assert_eq!(r.len(), 10);
        assert_eq!(r[9], 40.0);
        assert_eq!(inclusive_range(1.0, 1.0, 0.5).unwrap(), vec![1.0]);
        assert!(inclusive_range(2.0, 1.0, 1.0).is_err());
        assert!(inclusive_range(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn axis_names_round_trip() {
        for a in [SweepAxis::PMax, SweepAxis::E0, SweepAxis::I0, SweepAxis::K] {
            assert_eq!(a.name().parse::<SweepAxis>().unwrap(), a);
        }
    }
}
