//! Offline trajectory and transmit-power planning for a fixed-wing relay UAV
//! that serves a moving maritime user while sharing spectrum with satellite
//! users and using a shore base station for wireless backhaul.
//!
//! The planner maximises the minimum ergodic rate over a discretised flight
//! using only large-scale (location dependent) channel knowledge. Each outer
//! iteration re-solves the per-slot power allocation as a linear program and
//! then moves the trajectory through a bisection over a sequence of convex
//! feasibility problems built from first-order minorants.
//!
//! Module map:
//! - [`scenario`]: problem data, JSON schema, unit conversion, validation.
//! - [`channel`]: path loss, link coefficients, average SNR, ergodic rate.
//! - [`convex`]: canonical convex subproblem and the interior-point solver.
//! - [`power`]: the transmit-power linear program.
//! - [`trajectory`]: linearised trajectory feasibility and bisection.
//! - [`sca`]: the outer successive convex approximation loop and audit.
//! - [`sweep`]: parameter sweeps with warm-started continuation.
//! - [`oracle`]: independent reference tools used for verification.
//! - [`report`]: CSV writers for plans, traces and sweeps.

pub mod channel;
pub mod convex;
pub mod error;
pub mod geometry;
pub mod oracle;
pub mod power;
pub mod report;
pub mod sca;
pub mod scenario;
pub mod sweep;
pub mod trajectory;

pub use error::{Error, Result};
pub use geometry::Vec3;
pub use sca::{plan, plan_best, AuditReport, FlightPlan, IterationTrace, Mode, PlanOptions, PlanOutcome};
pub use scenario::{load_scenario, paper_scenario, toy_scenario, Scenario};
pub use sweep::{run_sweep, SweepAxis};
