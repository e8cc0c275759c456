//! Plain-text serialisation of a [`ConvexSubproblem`].
//!
//! ```text
//! convex-subproblem 1
//! vars 2
//! objective 1 0 1
//! bound 0 0 inf
//! linear cap le 4 2 0 1 1 2
//! ball disc 2
//! radius 1 0
//! comp 0 1 0 1
//! comp 0 1 1 1
//! ```
//!
//! Sparse term lists are written as a count followed by `index value`
//! pairs. Floats use the shortest representation that round-trips.

use std::fmt::Write as _;

use super::{Affine, BallConstraint, ConvexSubproblem, LinearConstraint, Sense};
use crate::error::{Error, Result};

const MAGIC: &str = "convex-subproblem 1";

fn write_terms(out: &mut String, terms: &[(usize, f64)]) {
    write!(out, "{}", terms.len()).unwrap();
    for (i, v) in terms {
        write!(out, " {i} {v:?}").unwrap();
    }
}

pub fn to_text(p: &ConvexSubproblem) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "vars {}", p.n_vars).unwrap();
    let obj: Vec<(usize, f64)> = p
        .objective
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(i, c)| (i, *c))
        .collect();
    out.push_str("objective ");
    write_terms(&mut out, &obj);
    out.push('\n');
    for i in 0..p.n_vars {
        if p.lower[i].is_finite() || p.upper[i].is_finite() {
            writeln!(out, "bound {i} {:?} {:?}", p.lower[i], p.upper[i]).unwrap();
        }
    }
    for row in &p.linear {
        let sense = match row.sense {
            Sense::Le => "le",
            Sense::Ge => "ge",
            Sense::Eq => "eq",
        };
        write!(out, "linear {} {sense} {:?} ", row.label, row.bound).unwrap();
        write_terms(&mut out, &row.coeffs);
        out.push('\n');
    }
    for ball in &p.balls {
        writeln!(out, "ball {} {}", ball.label, ball.center_offset.len()).unwrap();
        write!(out, "radius {:?} ", ball.radius_sq.constant).unwrap();
        write_terms(&mut out, &ball.radius_sq.terms);
        out.push('\n');
        for e in &ball.center_offset {
            write!(out, "comp {:?} ", e.constant).unwrap();
            write_terms(&mut out, &e.terms);
            out.push('\n');
        }
    }
    out
}

struct Tokens<'a> {
    line: usize,
    iter: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn err(&self, what: &str) -> Error {
        Error::Solver(format!("subproblem text line {}: {what}", self.line))
    }

    fn word(&mut self) -> Result<&'a str> {
        self.iter.next().ok_or_else(|| self.err("unexpected end of line"))
    }

    fn float(&mut self) -> Result<f64> {
        let w = self.word()?;
        w.parse().map_err(|_| self.err(&format!("bad number `{w}`")))
    }

    fn index(&mut self) -> Result<usize> {
        let w = self.word()?;
        w.parse().map_err(|_| self.err(&format!("bad index `{w}`")))
    }

    fn terms(&mut self) -> Result<Vec<(usize, f64)>> {
        let k = self.index()?;
        (0..k).map(|_| Ok((self.index()?, self.float()?))).collect()
    }

    fn finish(mut self) -> Result<()> {
        match self.iter.next() {
            None => Ok(()),
            Some(w) => Err(self.err(&format!("trailing token `{w}`"))),
        }
    }
}

pub fn parse_text(text: &str) -> Result<ConvexSubproblem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let bad = |line: usize, what: &str| Error::Solver(format!("subproblem text line {line}: {what}"));
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        Some((n, _)) => return Err(bad(n, "missing header")),
        None => return Err(bad(0, "empty input")),
    }
    let mut problem: Option<ConvexSubproblem> = None;
    let mut pending_ball: Option<(BallConstraint, usize)> = None;
    for (line, content) in lines {
        let mut tok = Tokens {
            line,
            iter: content.split_whitespace(),
        };
        let key = tok.word()?;
        if let Some((ball, remaining)) = pending_ball.as_mut() {
            match key {
                "radius" => {
                    let c = tok.float()?;
                    ball.radius_sq = Affine::new(tok.terms()?, c);
                }
                "comp" if *remaining > 0 => {
                    let c = tok.float()?;
                    ball.center_offset.push(Affine::new(tok.terms()?, c));
                    *remaining -= 1;
                }
                _ => return Err(bad(line, &format!("unexpected `{key}` inside ball"))),
            }
            tok.finish()?;
            if *remaining == 0 {
                let (ball, _) = pending_ball.take().unwrap();
                problem.as_mut().unwrap().balls.push(ball);
            }
            continue;
        }
        if key == "vars" {
            if problem.is_some() {
                return Err(bad(line, "duplicate vars line"));
            }
            problem = Some(ConvexSubproblem::new(tok.index()?));
            tok.finish()?;
            continue;
        }
        let p = problem.as_mut().ok_or_else(|| bad(line, "vars must come first"))?;
        match key {
            "objective" => {
                for (i, c) in tok.terms()? {
                    *p.objective.get_mut(i).ok_or_else(|| bad(line, "objective index out of range"))? = c;
                }
            }
            "bound" => {
                let i = tok.index()?;
                if i >= p.n_vars {
                    return Err(bad(line, "bound index out of range"));
                }
                p.lower[i] = tok.float()?;
                p.upper[i] = tok.float()?;
            }
            "linear" => {
                let label = tok.word()?.to_string();
                let sense = match tok.word()? {
                    "le" => Sense::Le,
                    "ge" => Sense::Ge,
                    "eq" => Sense::Eq,
                    other => return Err(bad(line, &format!("bad sense `{other}`"))),
                };
                let bound = tok.float()?;
                p.linear.push(LinearConstraint {
                    label,
                    coeffs: tok.terms()?,
                    sense,
                    bound,
                });
            }
            "ball" => {
                let label = tok.word()?.to_string();
                let k = tok.index()?;
                pending_ball = Some((
                    BallConstraint {
                        label,
                        center_offset: Vec::with_capacity(k),
                        radius_sq: Affine::default(),
                    },
                    k,
                ));
            }
            other => return Err(bad(line, &format!("unknown keyword `{other}`"))),
        }
        tok.finish()?;
    }
    if pending_ball.is_some() {
        return Err(bad(0, "truncated ball block"));
    }
    let p = problem.ok_or_else(|| bad(0, "missing vars line"))?;
    p.validate()?;
    Ok(p)
}
