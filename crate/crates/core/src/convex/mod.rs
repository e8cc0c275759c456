//! Canonical convex subproblem and its solver.
//!
//! A [`ConvexSubproblem`] maximises a linear objective over
//! - linear rows `a·x {≤, ≥, =} b`,
//! - ball rows `‖e(x)‖² ≤ r(x)` with `e` and `r` affine (a rotated
//!   second-order cone with one coordinate fixed), and
//! - per-variable bounds.
//!
//! Every admissible instance is convex by construction. [`solve`] runs an
//! explicit phase-I followed by a primal-dual interior-point method; see
//! [`solver`] for details.

mod dump;
pub mod solver;

use crate::error::{Error, Result};

pub use dump::{parse_text, to_text};
pub use solver::{solve, solve_with_hint, IterationResiduals, SolveResult, SolveStatus, SolverOptions};

/// Sparse affine expression `Σ coef·x[index] + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn new(terms: Vec<(usize, f64)>, constant: f64) -> Self {
        Affine { terms, constant }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(i, c)| acc + c * x[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub label: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub bound: f64,
}

/// `‖center_offset(x)‖² ≤ radius_sq(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallConstraint {
    pub label: String,
    pub center_offset: Vec<Affine>,
    pub radius_sq: Affine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSubproblem {
    pub n_vars: usize,
    /// Dense cost vector; the objective `objective·x` is maximised.
    pub objective: Vec<f64>,
    pub linear: Vec<LinearConstraint>,
    pub balls: Vec<BallConstraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ConvexSubproblem {
    pub fn new(n_vars: usize) -> Self {
        ConvexSubproblem {
            n_vars,
            objective: vec![0.0; n_vars],
            linear: Vec::new(),
            balls: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n_vars],
            upper: vec![f64::INFINITY; n_vars],
        }
    }

    pub fn add_linear(&mut self, label: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: Sense, bound: f64) {
        self.linear.push(LinearConstraint {
            label: label.into(),
            coeffs,
            sense,
            bound,
        });
    }

    pub fn add_ball(&mut self, label: impl Into<String>, center_offset: Vec<Affine>, radius_sq: Affine) {
        self.balls.push(BallConstraint {
            label: label.into(),
            center_offset,
            radius_sq,
        });
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn has_objective(&self) -> bool {
        self.objective.iter().any(|&c| c != 0.0)
    }

    /// Number of inequality and equality rows, counting finite bounds.
    pub fn row_counts(&self) -> RowCounts {
        let mut counts = RowCounts::default();
        for row in &self.linear {
            match row.sense {
                Sense::Eq => counts.linear_eq += 1,
                _ => counts.linear_ineq += 1,
            }
        }
        counts.balls = self.balls.len();
        for (lo, hi) in self.lower.iter().zip(&self.upper) {
            counts.bounds += lo.is_finite() as usize + hi.is_finite() as usize;
        }
        counts
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars;
        let bad = |what: String| Error::Solver(format!("ill-formed subproblem: {what}"));
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(bad("vector lengths disagree with n_vars".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(bad("non-finite objective coefficient".into()));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || *lo == f64::INFINITY || *hi == f64::NEG_INFINITY {
                return Err(bad(format!("bad bounds on variable {i}: [{lo}, {hi}]")));
            }
        }
        let check_terms = |label: &str, terms: &[(usize, f64)]| -> Result<()> {
            for &(i, c) in terms {
                if i >= n || !c.is_finite() {
                    return Err(bad(format!("row `{label}` has bad term ({i}, {c})")));
                }
            }
            Ok(())
        };
        for row in &self.linear {
            check_terms(&row.label, &row.coeffs)?;
            if !row.bound.is_finite() {
                return Err(bad(format!("row `{}` has non-finite bound", row.label)));
            }
        }
        for ball in &self.balls {
            for e in ball.center_offset.iter().chain(std::iter::once(&ball.radius_sq)) {
                check_terms(&ball.label, &e.terms)?;
                if !e.constant.is_finite() {
                    return Err(bad(format!("row `{}` has non-finite constant", ball.label)));
                }
            }
        }
        Ok(())
    }

    /// Signed residual of every row; positive means violated.
    pub fn residuals(&self, x: &[f64]) -> Vec<(String, f64)> {
        let mut out = Vec::with_capacity(self.linear.len() + self.balls.len());
        for row in &self.linear {
            let v: f64 = row.coeffs.iter().map(|&(i, c)| c * x[i]).sum();
            let r = match row.sense {
                Sense::Le => v - row.bound,
                Sense::Ge => row.bound - v,
                Sense::Eq => (v - row.bound).abs(),
            };
            out.push((row.label.clone(), r));
        }
        for ball in &self.balls {
            let sq: f64 = ball.center_offset.iter().map(|e| e.eval(x).powi(2)).sum();
            out.push((ball.label.clone(), sq - ball.radius_sq.eval(x)));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo.is_finite() {
                out.push((format!("lower[{i}]"), lo - x[i]));
            }
            if hi.is_finite() {
                out.push((format!("upper[{i}]"), x[i] - hi));
            }
        }
        out
    }

    /// The most violated (or least slack) row and its residual.
    pub fn worst_row(&self, x: &[f64]) -> Option<(String, f64)> {
        self.residuals(x)
            .into_iter()
            .fold(None, |best: Option<(String, f64)>, (label, r)| match best {
                Some((_, b)) if b >= r => best,
                _ => Some((label, r)),
            })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RowCounts {
    pub linear_ineq: usize,
    pub linear_eq: usize,
    pub balls: usize,
    pub bounds: usize,
}

/// Largest signed residual over all rows of `problem` at `x`. A value at or
/// below the feasibility tolerance means `x` is feasible.
pub fn check_feasible(problem: &ConvexSubproblem, x: &[f64]) -> f64 {
    assert_eq!(x.len(), problem.n_vars, "dimension mismatch");
    problem
        .residuals(x)
        .into_iter()
        .map(|(_, r)| r)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_of_violated_row() {
        let mut p = ConvexSubproblem::new(2);
        p.add_linear("a", vec![(0, 1.0), (1, 1.0)], Sense::Le, 1.0);
        p.add_linear("b", vec![(0, 1.0)], Sense::Ge, -5.0);
        p.set_bounds(1, 0.0, 10.0);
        assert!(check_feasible(&p, &[0.5, 0.25]) <= 1e-8);
        assert!((check_feasible(&p, &[1.0, 0.5]) - 0.5).abs() < 1e-15);
        assert_eq!(p.worst_row(&[1.0, 0.5]).unwrap().0, "a");
    }

    #[test]
    fn ball_and_equality_residuals() {
        let mut p = ConvexSubproblem::new(2);
        p.add_ball(
            "ball",
            vec![Affine::new(vec![(0, 1.0)], 0.0), Affine::new(vec![(1, 1.0)], -1.0)],
            Affine::constant(4.0),
        );
        p.add_linear("eq", vec![(0, 1.0)], Sense::Eq, 1.0);
        let r = p.residuals(&[3.0, 1.0]);
        assert_eq!(r[0], ("eq".to_string(), 2.0));
        assert_eq!(r[1], ("ball".to_string(), 5.0));
    }

    #[test]
    fn validate_rejects_out_of_range_index() {
        let mut p = ConvexSubproblem::new(1);
        p.add_linear("oops", vec![(3, 1.0)], Sense::Le, 0.0);
        assert!(p.validate().is_err());
        let mut q = ConvexSubproblem::new(1);
        q.set_bounds(0, 2.0, 1.0);
        assert!(q.validate().is_err());
    }
}
