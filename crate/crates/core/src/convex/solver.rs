//! Primal-dual interior-point method for smooth convex inequalities.
//!
//! Ball rows are handled through their smooth form
//! `f(x) = ‖e(x)‖² − r(x) ≤ 0`, whose logarithmic barrier coincides with the
//! barrier of the associated rotated cone. Equalities (including bounds with
//! `lower == upper`) enter the KKT system directly.
//!
//! Phase I minimises `s` subject to `f_i(x) ≤ s` and `s ≥ −1`. Phase II then
//! starts from the strictly feasible point it produced.

use nalgebra::{DMatrix, DVector};

use super::{Affine, ConvexSubproblem, Sense};
use crate::error::Result;

const MU: f64 = 10.0;
const ALPHA: f64 = 0.01;
const BETA: f64 = 0.5;
const STEP_FRACTION: f64 = 0.99;
const PHASE1_MARGIN: f64 = 1e-3;
const UNBOUNDED_FACTOR: f64 = 1e12;
const TRUST_FACTOR: f64 = 1e3;
const MAX_CENTERING_STEPS: usize = 100;
const CENTERING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-8,
            opt_tol: 1e-8,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationResiduals {
    pub phase: u8,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub max_violation: f64,
    pub iterations: usize,
    /// Optimal (or last) value of the phase-I slack.
    pub phase1_value: f64,
    pub history: Vec<IterationResiduals>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solve from the origin.
pub fn solve(problem: &ConvexSubproblem, options: &SolverOptions) -> Result<SolveResult> {
    let x0 = vec![0.0; problem.n_vars];
    solve_with_hint(problem, &x0, options)
}

/// Solve starting phase I from `hint`. The hint need not be feasible.
pub fn solve_with_hint(problem: &ConvexSubproblem, hint: &[f64], options: &SolverOptions) -> Result<SolveResult> {
    problem.validate()?;
    assert_eq!(hint.len(), problem.n_vars, "hint dimension mismatch");
    let compiled = Compiled::new(problem);
    let n = compiled.n;
    let mut history = Vec::new();
    let mut iterations = 0;

    let x0: Vec<f64> = hint
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let v = if v.is_finite() { v } else { 0.0 };
            v.clamp(problem.lower[i], problem.upper[i])
        })
        .collect();

    let finish = |status: SolveStatus, x: Vec<f64>, phase1: f64, iterations: usize, history: Vec<IterationResiduals>| {
        SolveResult {
            status,
            objective_value: problem.objective_value(&x),
            max_violation: super::check_feasible(problem, &x),
            x,
            iterations,
            phase1_value: phase1,
            history,
        }
    };

    // Phase I.
    let (x_feasible, s_final) = if compiled.ineqs.is_empty() {
        let x = project_equalities(&compiled, &x0);
        (x, f64::NEG_INFINITY)
    } else {
        let mut start = project_equalities(&compiled, &x0);
        let base_max = compiled
            .ineqs
            .iter()
            .map(|g| g.value(&start))
            .fold(f64::NEG_INFINITY, f64::max);
        let s0 = base_max.max(-0.5) + 1.0;
        start.push(s0);
        let radius = TRUST_FACTOR * (1.0 + inf_norm(&start[..n]));
        let system = System {
            compiled: &compiled,
            phase1: true,
            shift: 0.0,
            trust: Some((start[..n].to_vec(), radius * radius)),
        };
        let cost: Vec<f64> = (0..=n).map(|i| if i == n { 1.0 } else { 0.0 }).collect();
        let outcome = run(&system, &cost, start, options, &mut history, &mut iterations);
        let s = outcome.x[n];
        let mut x = outcome.x;
        x.truncate(n);
        match outcome.status {
            CoreStatus::EarlyFeasible => (x, s),
            CoreStatus::Converged | CoreStatus::Stalled { .. } => {
                if s >= options.feas_tol {
                    return Ok(finish(SolveStatus::Infeasible, x, s, iterations, history));
                }
                (x, s)
            }
            CoreStatus::Certified => return Ok(finish(SolveStatus::Infeasible, x, s, iterations, history)),
            CoreStatus::MaxIterations | CoreStatus::Unbounded => {
                return Ok(finish(SolveStatus::MaxIterations, x, s, iterations, history));
            }
        }
    };

    if !problem.has_objective() {
        return Ok(finish(SolveStatus::Optimal, x_feasible, s_final, iterations, history));
    }

    // Phase II: shift the rows slightly when phase I only reached the boundary.
    let shift = if s_final < 0.0 { 0.0 } else { 0.5 * (s_final + options.feas_tol) };
    let system = System {
        compiled: &compiled,
        phase1: false,
        shift,
        trust: None,
    };
    let scale0 = inf_norm(&x_feasible);
    let outcome = run(&system, &compiled.cost, x_feasible, options, &mut history, &mut iterations);
    let status = match outcome.status {
        CoreStatus::Converged => SolveStatus::Optimal,
        CoreStatus::Stalled { near_optimal: true } => SolveStatus::Optimal,
        CoreStatus::Unbounded => SolveStatus::Unbounded,
        _ => {
            if inf_norm(&outcome.x) > UNBOUNDED_FACTOR * (1.0 + scale0) {
                SolveStatus::Unbounded
            } else {
                SolveStatus::MaxIterations
            }
        }
    };
    Ok(finish(status, outcome.x, s_final, iterations, history))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

enum Ineq {
    Linear { coeffs: Vec<(usize, f64)>, rhs: f64 },
    Ball { comps: Vec<Affine>, radius: Affine },
}

impl Ineq {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Ineq::Linear { coeffs, rhs } => coeffs.iter().map(|&(i, c)| c * x[i]).sum::<f64>() - rhs,
            Ineq::Ball { comps, radius } => comps.iter().map(|e| e.eval(x).powi(2)).sum::<f64>() - radius.eval(x),
        }
    }

    fn gradient(&self, x: &[f64], out: &mut Vec<(usize, f64)>) {
        match self {
            Ineq::Linear { coeffs, .. } => out.extend_from_slice(coeffs),
            Ineq::Ball { comps, radius } => {
                for e in comps {
                    let v = 2.0 * e.eval(x);
                    out.extend(e.terms.iter().map(|&(i, c)| (i, v * c)));
                }
                out.extend(radius.terms.iter().map(|&(i, c)| (i, -c)));
            }
        }
    }

    fn add_curvature(&self, weight: f64, h: &mut DMatrix<f64>) {
        if let Ineq::Ball { comps, .. } = self {
            for e in comps {
                for &(i, a) in &e.terms {
                    for &(j, b) in &e.terms {
                        h[(i, j)] += 2.0 * weight * a * b;
                    }
                }
            }
        }
    }
}

struct Compiled {
    n: usize,
    ineqs: Vec<Ineq>,
    eq_rows: Vec<Vec<(usize, f64)>>,
    eq_rhs: Vec<f64>,
    /// Minimisation cost (negated objective).
    cost: Vec<f64>,
}

impl Compiled {
    fn new(p: &ConvexSubproblem) -> Self {
        let mut ineqs = Vec::new();
        let mut eq_rows = Vec::new();
        let mut eq_rhs = Vec::new();
        for row in &p.linear {
            match row.sense {
                Sense::Le => ineqs.push(Ineq::Linear {
                    coeffs: row.coeffs.clone(),
                    rhs: row.bound,
                }),
                Sense::Ge => ineqs.push(Ineq::Linear {
                    coeffs: row.coeffs.iter().map(|&(i, c)| (i, -c)).collect(),
                    rhs: -row.bound,
                }),
                Sense::Eq => {
                    eq_rows.push(row.coeffs.clone());
                    eq_rhs.push(row.bound);
                }
            }
        }
        for ball in &p.balls {
            ineqs.push(Ineq::Ball {
                comps: ball.center_offset.clone(),
                radius: ball.radius_sq.clone(),
            });
        }
        for i in 0..p.n_vars {
            let (lo, hi) = (p.lower[i], p.upper[i]);
            if lo == hi {
                eq_rows.push(vec![(i, 1.0)]);
                eq_rhs.push(lo);
                continue;
            }
            if lo.is_finite() {
                ineqs.push(Ineq::Linear {
                    coeffs: vec![(i, -1.0)],
                    rhs: -lo,
                });
            }
            if hi.is_finite() {
                ineqs.push(Ineq::Linear {
                    coeffs: vec![(i, 1.0)],
                    rhs: hi,
                });
            }
        }
        Compiled {
            n: p.n_vars,
            ineqs,
            eq_rows,
            eq_rhs,
            cost: p.objective.iter().map(|c| -c).collect(),
        }
    }

    fn primal_residual(&self, x: &[f64]) -> Vec<f64> {
        self.eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|(row, b)| row.iter().map(|&(i, c)| c * x[i]).sum::<f64>() - b)
            .collect()
    }
}

/// Least-norm correction of `x` onto the equality rows.
fn project_equalities(c: &Compiled, x: &[f64]) -> Vec<f64> {
    if c.eq_rows.is_empty() {
        return x.to_vec();
    }
    let p = c.eq_rows.len();
    let mut a = DMatrix::<f64>::zeros(p, c.n);
    for (r, row) in c.eq_rows.iter().enumerate() {
        for &(i, v) in row {
            a[(r, i)] += v;
        }
    }
    let r = DVector::from_vec(c.primal_residual(x));
    let aat: DMatrix<f64> = &a * a.transpose();
    let y = aat.lu().solve(&r).unwrap_or_else(|| DVector::zeros(p));
    let dx = a.transpose() * y;
    x.iter().zip(dx.iter()).map(|(v, d)| v - d).collect()
}

struct System<'a> {
    compiled: &'a Compiled,
    phase1: bool,
    shift: f64,
    /// Phase I only: `‖x − center‖² ≤ radius²` keeps the barrier bounded.
    trust: Option<(Vec<f64>, f64)>,
}

impl System<'_> {
    fn dim(&self) -> usize {
        self.compiled.n + self.phase1 as usize
    }

    fn m(&self) -> usize {
        self.compiled.ineqs.len() + self.phase1 as usize + self.trust.is_some() as usize
    }

    fn values(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let n = self.compiled.n;
        let s = if self.phase1 { x[n] } else { 0.0 };
        out.extend(self.compiled.ineqs.iter().map(|g| g.value(x) - self.shift - s));
        if self.phase1 {
            out.push(-s - 1.0);
        }
        if let Some((c, r2)) = &self.trust {
            out.push(c.iter().zip(x).map(|(a, b)| (b - a).powi(2)).sum::<f64>() - r2);
        }
    }

    fn gradient(&self, i: usize, x: &[f64], out: &mut Vec<(usize, f64)>) {
        out.clear();
        let n = self.compiled.n;
        let k = self.compiled.ineqs.len();
        if i < k {
            self.compiled.ineqs[i].gradient(x, out);
            if self.phase1 {
                out.push((n, -1.0));
            }
        } else if i == k && self.phase1 {
            out.push((n, -1.0));
        } else if let Some((c, _)) = &self.trust {
            out.extend(c.iter().enumerate().map(|(j, a)| (j, 2.0 * (x[j] - a))));
        }
    }

    fn add_curvature(&self, i: usize, weight: f64, h: &mut DMatrix<f64>) {
        let k = self.compiled.ineqs.len();
        if i < k {
            self.compiled.ineqs[i].add_curvature(weight, h);
        } else if i == k + 1 {
            if let Some((c, _)) = &self.trust {
                for j in 0..c.len() {
                    h[(j, j)] += 2.0 * weight;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CoreStatus {
    Converged,
    EarlyFeasible,
    Certified,
    Stalled { near_optimal: bool },
    MaxIterations,
    Unbounded,
}

struct CoreOutcome {
    x: Vec<f64>,
    status: CoreStatus,
}

struct Residuals {
    f: Vec<f64>,
    grads: Vec<Vec<(usize, f64)>>,
    dual: Vec<f64>,
    primal: Vec<f64>,
}

fn evaluate(sys: &System, cost: &[f64], x: &[f64], lambda: &[f64], nu: &[f64]) -> Residuals {
    let mut f = Vec::with_capacity(sys.m());
    sys.values(x, &mut f);
    let mut grads = Vec::with_capacity(sys.m());
    let mut dual = cost.to_vec();
    for i in 0..sys.m() {
        let mut g = Vec::new();
        sys.gradient(i, x, &mut g);
        for &(j, v) in &g {
            dual[j] += lambda[i] * v;
        }
        grads.push(g);
    }
    for (row, &v) in sys.compiled.eq_rows.iter().zip(nu) {
        for &(j, c) in row {
            dual[j] += c * v;
        }
    }
    Residuals {
        f,
        grads,
        dual,
        primal: sys.compiled.primal_residual(x),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual_norm(r: &Residuals, lambda: &[f64], t: f64) -> f64 {
    let cent: f64 = r.f.iter().zip(lambda).map(|(f, l)| (-l * f - 1.0 / t).powi(2)).sum();
    (norm(&r.dual).powi(2) + cent + norm(&r.primal).powi(2)).sqrt()
}

fn run(
    sys: &System,
    cost: &[f64],
    x0: Vec<f64>,
    opts: &SolverOptions,
    history: &mut Vec<IterationResiduals>,
    iterations: &mut usize,
) -> CoreOutcome {
    let m = sys.m();
    let dim = sys.dim();
    let n_base = sys.compiled.n;
    let p = sys.compiled.eq_rows.len();
    let phase = if sys.phase1 { 1 } else { 2 };
    let cost_scale = 1.0 + inf_norm(cost);
    let rhs_scale = 1.0 + inf_norm(&sys.compiled.eq_rhs);
    let dual_tol = 0.1 * opts.feas_tol * cost_scale;
    let primal_tol = 0.01 * opts.feas_tol * rhs_scale;
    let x_scale = 1.0 + inf_norm(&x0);

    let mut x = x0;
    let f0: f64 = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    let t0 = m as f64 / (1.0 + f0.abs());
    let mut nu = match center(sys, cost, &mut x, t0, x_scale, iterations) {
        Centering::Done(w) => w.iter().map(|v| v / t0).collect::<Vec<_>>(),
        Centering::EarlyFeasible => {
            return CoreOutcome {
                x,
                status: CoreStatus::EarlyFeasible,
            }
        }
        Centering::Unbounded => {
            return CoreOutcome {
                x,
                status: CoreStatus::Unbounded,
            }
        }
    };
    nu.resize(p, 0.0);
    let mut vals = Vec::new();
    sys.values(&x, &mut vals);
    let mut lambda: Vec<f64> = vals.iter().map(|&f| -1.0 / (t0 * f)).collect();

    for _ in 0..opts.max_iterations {
        let r = evaluate(sys, cost, &x, &lambda, &nu);
        let eta: f64 = -r.f.iter().zip(&lambda).map(|(f, l)| f * l).sum::<f64>();
        let rd = norm(&r.dual);
        let rp = norm(&r.primal);
        history.push(IterationResiduals {
            phase,
            primal: rp,
            dual: rd,
            gap: eta,
        });

        let primal_ok = rp <= primal_tol;
        let dual_ok = rd <= dual_tol;
        if sys.phase1 {
            let s = x[n_base];
            if s <= -PHASE1_MARGIN && primal_ok {
                return CoreOutcome {
                    x,
                    status: CoreStatus::EarlyFeasible,
                };
            }
            if primal_ok && dual_ok {
                if s - eta > opts.feas_tol {
                    return CoreOutcome {
                        x,
                        status: CoreStatus::Certified,
                    };
                }
                if eta <= 0.01 * opts.feas_tol {
                    return CoreOutcome {
                        x,
                        status: CoreStatus::Converged,
                    };
                }
            }
        } else {
            let f0: f64 = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
            if primal_ok && dual_ok && eta <= opts.opt_tol * f0.abs().max(1.0) {
                return CoreOutcome {
                    x,
                    status: CoreStatus::Converged,
                };
            }
            if inf_norm(&x) > UNBOUNDED_FACTOR * x_scale {
                return CoreOutcome {
                    x,
                    status: CoreStatus::Unbounded,
                };
            }
        }
        *iterations += 1;

        let t = MU * m as f64 / eta.max(f64::MIN_POSITIVE);
        let cent: Vec<f64> = r.f.iter().zip(&lambda).map(|(f, l)| -l * f - 1.0 / t).collect();

        let mut h = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs_x: Vec<f64> = r.dual.iter().map(|v| -v).collect();
        for i in 0..m {
            let fi = r.f[i];
            sys.add_curvature(i, lambda[i], &mut h);
            let w = lambda[i] / -fi;
            let g = &r.grads[i];
            for &(a, va) in g {
                for &(b, vb) in g {
                    h[(a, b)] += w * va * vb;
                }
                rhs_x[a] -= va * cent[i] / fi;
            }
        }
        let rhs_nu: Vec<f64> = r.primal.iter().map(|v| -v).collect();
        let Some((dx, dnu)) = solve_kkt(h, &sys.compiled.eq_rows, &rhs_x, &rhs_nu) else {
            return stalled(x, eta, rd, dual_tol, opts, cost, sys.phase1);
        };
        let dlambda: Vec<f64> = (0..m)
            .map(|i| {
                let gdx: f64 = r.grads[i].iter().map(|&(j, v)| v * dx[j]).sum();
                (cent[i] - lambda[i] * gdx) / r.f[i]
            })
            .collect();

        let mut s_max: f64 = 1.0;
        for (l, dl) in lambda.iter().zip(&dlambda) {
            if *dl < 0.0 {
                s_max = s_max.min(-l / dl);
            }
        }
        let mut step = STEP_FRACTION * s_max;
        let base = residual_norm(&r, &lambda, t);
        let mut trial_x = vec![0.0; dim];
        let mut trial_vals = Vec::with_capacity(m);
        let mut accepted = false;
        while step > 1e-14 {
            for j in 0..dim {
                trial_x[j] = x[j] + step * dx[j];
            }
            sys.values(&trial_x, &mut trial_vals);
            if trial_vals.iter().all(|&v| v < 0.0) {
                let trial_lambda: Vec<f64> = lambda.iter().zip(&dlambda).map(|(l, d)| l + step * d).collect();
                let trial_nu: Vec<f64> = nu.iter().zip(&dnu).map(|(v, d)| v + step * d).collect();
                let tr = evaluate(sys, cost, &trial_x, &trial_lambda, &trial_nu);
                if residual_norm(&tr, &trial_lambda, t) <= (1.0 - ALPHA * step) * base {
                    x.copy_from_slice(&trial_x);
                    lambda = trial_lambda;
                    nu = trial_nu;
                    accepted = true;
                    break;
                }
            }
            step *= BETA;
        }
        if !accepted {
            return stalled(x, eta, rd, dual_tol, opts, cost, sys.phase1);
        }
    }
    CoreOutcome {
        x,
        status: CoreStatus::MaxIterations,
    }
}

enum Centering {
    Done(Vec<f64>),
    EarlyFeasible,
    Unbounded,
}

/// Damped Newton minimisation of `t·cᵀx − Σ log(−f_i(x))` on the affine set,
/// used to place the primal-dual iteration near the central path.
fn center(sys: &System, cost: &[f64], x: &mut Vec<f64>, t: f64, x_scale: f64, iterations: &mut usize) -> Centering {
    let m = sys.m();
    let dim = sys.dim();
    let n_base = sys.compiled.n;
    let p = sys.compiled.eq_rows.len();
    let psi = |x: &[f64], vals: &mut Vec<f64>| -> f64 {
        sys.values(x, vals);
        if vals.iter().any(|&v| v >= 0.0) {
            return f64::INFINITY;
        }
        let lin: f64 = cost.iter().zip(x).map(|(c, v)| c * v).sum();
        t * lin - vals.iter().map(|v| (-v).ln()).sum::<f64>()
    };
    let mut vals = Vec::with_capacity(m);
    let mut grad = Vec::new();
    let mut w = vec![0.0; p];
    for _ in 0..MAX_CENTERING_STEPS {
        if sys.phase1 && x[n_base] <= -PHASE1_MARGIN {
            return Centering::EarlyFeasible;
        }
        let value = psi(x, &mut vals);
        let mut g: Vec<f64> = cost.iter().map(|c| t * c).collect();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..m {
            let fi = vals[i];
            sys.gradient(i, x, &mut grad);
            sys.add_curvature(i, 1.0 / -fi, &mut h);
            for &(a, va) in &grad {
                g[a] += va / -fi;
                for &(b, vb) in &grad {
                    h[(a, b)] += va * vb / (fi * fi);
                }
            }
        }
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let Some((dx, wn)) = solve_kkt(h, &sys.compiled.eq_rows, &neg_g, &vec![0.0; p]) else {
            break;
        };
        w = wn;
        let slope: f64 = g.iter().zip(&dx).map(|(a, b)| a * b).sum();
        if -slope / 2.0 <= CENTERING_TOL {
            break;
        }
        let mut step = 1.0;
        let mut trial = vec![0.0; dim];
        let mut accepted = false;
        while step > 1e-14 {
            for j in 0..dim {
                trial[j] = x[j] + step * dx[j];
            }
            if psi(&trial, &mut vals) <= value + ALPHA * step * slope {
                accepted = true;
                break;
            }
            step *= BETA;
        }
        if !accepted {
            break;
        }
        x.copy_from_slice(&trial);
        *iterations += 1;
        if inf_norm(x) > UNBOUNDED_FACTOR * x_scale {
            return Centering::Unbounded;
        }
    }
    Centering::Done(w)
}

fn stalled(x: Vec<f64>, eta: f64, rd: f64, dual_tol: f64, opts: &SolverOptions, cost: &[f64], phase1: bool) -> CoreOutcome {
    let f0: f64 = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    let near_optimal = !phase1 && eta <= 1e3 * opts.opt_tol * f0.abs().max(1.0) && rd <= 1e3 * dual_tol;
    CoreOutcome {
        x,
        status: CoreStatus::Stalled { near_optimal },
    }
}

/// Solve `[H Aᵀ; A 0]·[dx; dν] = [rx; rν]` after symmetric Jacobi scaling
/// of `H`, retrying with growing diagonal regularisation.
fn solve_kkt(h: DMatrix<f64>, eq: &[Vec<(usize, f64)>], rhs_x: &[f64], rhs_nu: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = h.nrows();
    let p = eq.len();
    let scale: Vec<f64> = (0..n).map(|i| 1.0 / h[(i, i)].abs().max(1e-300).sqrt().max(1e-150)).collect();
    let scale: Vec<f64> = scale.iter().map(|s| if s.is_finite() { *s } else { 1.0 }).collect();
    let mut hs = h;
    for i in 0..n {
        for j in 0..n {
            hs[(i, j)] *= scale[i] * scale[j];
        }
    }
    let rx: Vec<f64> = rhs_x.iter().zip(&scale).map(|(r, s)| r * s).collect();
    for reg in [1e-14, 1e-11, 1e-8] {
        let mut hr = hs.clone();
        for i in 0..n {
            hr[(i, i)] += reg;
        }
        let sol: Option<Vec<f64>> = if p == 0 {
            hr.cholesky().map(|c| c.solve(&DVector::from_column_slice(&rx)).as_slice().to_vec())
        } else {
            let mut k = DMatrix::<f64>::zeros(n + p, n + p);
            k.view_mut((0, 0), (n, n)).copy_from(&hr);
            for (r, row) in eq.iter().enumerate() {
                for &(j, c) in row {
                    k[(n + r, j)] += c * scale[j];
                    k[(j, n + r)] += c * scale[j];
                }
                k[(n + r, n + r)] -= reg;
            }
            let mut rhs = rx.clone();
            rhs.extend_from_slice(rhs_nu);
            k.lu().solve(&DVector::from_vec(rhs)).map(|v| v.as_slice().to_vec())
        };
        if let Some(sol) = sol {
            if sol.iter().all(|v| v.is_finite()) {
                let dx = sol[..n].iter().zip(&scale).map(|(y, s)| y * s).collect();
                return Some((dx, sol[n..].to_vec()));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::super::{check_feasible, Affine, ConvexSubproblem, Sense};
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn small_lp() {
        // max x + y  s.t. x + 2y ≤ 4, 3x + y ≤ 6, x, y ≥ 0  → (1.6, 1.2), value 2.8
        let mut p = ConvexSubproblem::new(2);
        p.objective = vec![1.0, 1.0];
        p.add_linear("a", vec![(0, 1.0), (1, 2.0)], Sense::Le, 4.0);
        p.add_linear("b", vec![(0, 3.0), (1, 1.0)], Sense::Le, 6.0);
        p.set_bounds(0, 0.0, f64::INFINITY);
        p.set_bounds(1, 0.0, f64::INFINITY);
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective_value - 2.8).abs() < 1e-7);
        assert!(r.max_violation <= 1e-8);
    }

    #[test]
    fn disc_maximise_linear() {
        // max x + y over the unit disc → √2
        let mut p = ConvexSubproblem::new(2);
        p.objective = vec![1.0, 1.0];
        p.add_ball(
            "disc",
            vec![Affine::new(vec![(0, 1.0)], 0.0), Affine::new(vec![(1, 1.0)], 0.0)],
            Affine::constant(1.0),
        );
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective_value - 2f64.sqrt()).abs() < 1e-7);
    }

    #[test]
    fn equality_rows_are_honoured() {
        let mut p = ConvexSubproblem::new(3);
        p.objective = vec![0.0, 1.0, 1.0];
        p.add_linear("fix", vec![(0, 1.0)], Sense::Eq, 0.5);
        p.add_ball(
            "ball",
            vec![
                Affine::new(vec![(0, 1.0)], 0.0),
                Affine::new(vec![(1, 1.0)], 0.0),
                Affine::new(vec![(2, 1.0)], 0.0),
            ],
            Affine::constant(1.0),
        );
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[0] - 0.5).abs() < 1e-9);
        let expect = (2.0 * 0.75f64).sqrt();
        assert!((r.objective_value - expect).abs() < 1e-7);
    }

    #[test]
    fn infeasible_is_detected() {
        let mut p = ConvexSubproblem::new(1);
        p.add_linear("lo", vec![(0, 1.0)], Sense::Ge, 2.0);
        p.add_linear("hi", vec![(0, 1.0)], Sense::Le, 1.0);
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.phase1_value > 1e-8);
    }

    #[test]
    fn unbounded_is_detected() {
        let mut p = ConvexSubproblem::new(1);
        p.objective = vec![1.0];
        p.set_bounds(0, 0.0, f64::INFINITY);
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn feasibility_only_returns_feasible_point() {
        let mut p = ConvexSubproblem::new(2);
        p.add_ball(
            "b",
            vec![Affine::new(vec![(0, 1.0)], -3.0), Affine::new(vec![(1, 1.0)], 4.0)],
            Affine::constant(0.25),
        );
        let r = solve(&p, &opts()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(check_feasible(&p, &r.x) <= 1e-8);
    }

    #[test]
    fn tangent_point_is_accepted() {
        // The feasible set is the single point (1, 0).
        let mut p = ConvexSubproblem::new(2);
        p.add_ball(
            "b",
            vec![Affine::new(vec![(0, 1.0)], 0.0), Affine::new(vec![(1, 1.0)], 0.0)],
            Affine::constant(1.0),
        );
        p.add_linear("x", vec![(0, 1.0)], Sense::Ge, 1.0);
        let r = solve(&p, &opts()).unwrap();
        assert_ne!(r.status, SolveStatus::Infeasible, "{r:?}");
    }
}
