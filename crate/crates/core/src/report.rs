//! CSV writers.
//!
//! Column contracts:
//!
//! * `plan.csv`: `slot,x,y,z,vx,vy,vz,ax,ay,az,P_watts,avg_snr,ergodic_rate_bps_hz`
//! * `trace.csv`: `iteration,q_after_trajectory,q_after_power,bisection_probes,solver_iterations`,
//!   plus `wall_time_s` when timing is requested. Row `0` carries `Q^0` in
//!   both `q_` columns and zero counts.
//! * `sweep.csv`: `param_value,final_q,min_ergodic_rate,iterations`. A point
//!   that failed keeps its `param_value` and leaves the other fields empty.
//!
//! Floats use Rust's shortest round-trip formatting, so files are
//! byte-identical whenever the numbers are.

use std::io::{self, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sca::{FlightPlan, IterationTrace};
use crate::scenario::Scenario;
use crate::sweep::SweepRow;

pub const PLAN_HEADER: &str = "slot,x,y,z,vx,vy,vz,ax,ay,az,P_watts,avg_snr,ergodic_rate_bps_hz";
pub const TRACE_HEADER: &str = "iteration,q_after_trajectory,q_after_power,bisection_probes,solver_iterations";
pub const SWEEP_HEADER: &str = "param_value,final_q,min_ergodic_rate,iterations";

pub fn write_plan_csv<W: Write>(mut out: W, scenario: &Scenario, plan: &FlightPlan) -> Result<()> {
    let snr = plan.average_snr(scenario);
    let rates = plan.ergodic_rates(scenario)?;
    let mut text = String::from(PLAN_HEADER);
    text.push('\n');
    for t in 0..plan.num_slots() {
        let [x, y, z] = plan.positions[t];
        let [vx, vy, vz] = plan.velocities[t];
        let [ax, ay, az] = plan.accelerations[t];
        text.push_str(&format!(
            "{t},{x},{y},{z},{vx},{vy},{vz},{ax},{ay},{az},{},{},{}\n",
            plan.powers[t], snr[t], rates[t]
        ));
    }
    out.write_all(text.as_bytes()).map_err(stream_error)
}

pub fn write_trace_csv<W: Write>(mut out: W, trace: &IterationTrace, timing: bool) -> Result<()> {
    let mut text = String::from(TRACE_HEADER);
    if timing {
        text.push_str(",wall_time_s");
    }
    text.push('\n');
    text.push_str(&format!("0,{q},{q},0,0", q = trace.initial_q));
    if timing {
        text.push_str(",0");
    }
    text.push('\n');
    for r in &trace.records {
        text.push_str(&format!(
            "{},{},{},{},{}",
            r.l, r.q_after_trajectory, r.q_after_power, r.bisection_probes, r.solver_iterations
        ));
        if timing {
            text.push_str(&format!(",{}", r.wall_time.as_secs_f64()));
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(stream_error)
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for row in rows {
        match row.point() {
            Some(p) => text.push_str(&format!(
                "{},{},{},{}\n",
                row.value,
                p.outcome.plan.q_value,
                p.min_ergodic_rate,
                p.outcome.trace.iterations()
            )),
            None => text.push_str(&format!("{},,,\n", row.value)),
        }
    }
    out.write_all(text.as_bytes()).map_err(stream_error)
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut io::BufWriter<std::fs::File>) -> Result<()>,
{
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = io::BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(io_err)
}

fn stream_error(source: io::Error) -> Error {
    Error::Io {
        path: "<stream>".into(),
        source,
    }
}
