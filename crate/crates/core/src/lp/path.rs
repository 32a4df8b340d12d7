use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::engine::{Engine, Outcome};
use super::{LpStatus, ParametricLp};

/// Breakpoints closer than this (relative) are merged.
const MERGE_TOL: f64 = 1e-10;

/// One linear piece of the solution path: on `[a_lo, a_hi]` the basis is
/// fixed and `x(a) = x0 + a·x1` on the listed support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPiece {
    pub a_lo: f64,
    pub a_hi: f64,
    pub basis: Vec<usize>,
    pub support: Vec<usize>,
    pub x0: Vec<f64>,
    pub x1: Vec<f64>,
    pub obj0: f64,
    pub obj1: f64,
}

impl PathPiece {
    pub fn contains(&self, a: f64) -> bool {
        a >= self.a_lo && a <= self.a_hi
    }

    fn fill(&self, a: f64, out: &mut [f64]) {
        for ((&j, &u), &v) in self.support.iter().zip(&self.x0).zip(&self.x1) {
            out[j] = u + a * v;
        }
    }
}

/// Optimal solutions of a [`ParametricLp`] over an interval of the parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSolution {
    pub a_min: f64,
    pub a_max: f64,
    pub num_vars: usize,
    /// `Optimal` when some parameter in range is feasible.
    pub status: LpStatus,
    /// Parameters with an optimal solution; everything else in
    /// `[a_min, a_max]` is a gap.
    pub feasible_range: Option<(f64, f64)>,
    /// Pieces in increasing order of `a`.
    pub pieces: Vec<PathPiece>,
    pub pivots: usize,
}

impl PathSolution {
    /// Increasing piece boundaries a₁ < … < a_k.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.pieces.iter().map(|p| p.a_lo).collect();
        if let Some(last) = self.pieces.last() {
            b.push(last.a_hi);
        }
        b
    }

    /// Sub-intervals of `[a_min, a_max]` where the program is infeasible.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        match self.feasible_range {
            None => vec![(self.a_min, self.a_max)],
            Some((lo, hi)) => {
                let mut g = Vec::new();
                if lo > self.a_min {
                    g.push((self.a_min, lo));
                }
                if hi < self.a_max {
                    g.push((hi, self.a_max));
                }
                g
            }
        }
    }

    pub fn is_feasible_at(&self, a: f64) -> bool {
        self.piece_at(a).is_some()
    }

    pub fn piece_at(&self, a: f64) -> Option<&PathPiece> {
        if self.status != LpStatus::Optimal {
            return None;
        }
        // Pieces are sorted; take the last one starting at or below a.
        let idx = self.pieces.partition_point(|p| p.a_lo <= a);
        let piece = self.pieces.get(idx.checked_sub(1)?)?;
        piece.contains(a).then_some(piece)
    }

    /// Interpolated optimal solution at `a`, if `a` is in the feasible range.
    pub fn evaluate(&self, a: f64) -> Option<Vec<f64>> {
        let piece = self.piece_at(a)?;
        let mut x = vec![0.0; self.num_vars];
        piece.fill(a, &mut x);
        Some(x)
    }

    pub fn objective_at(&self, a: f64) -> Option<f64> {
        self.piece_at(a).map(|p| p.obj0 + a * p.obj1)
    }
}

/// Follow the optimum of `lp` from `a_max` down to `a_min`.
pub fn solve_path(lp: &ParametricLp, a_min: f64, a_max: f64) -> Result<PathSolution> {
    PathTracer::new(lp, a_min, a_max, None)?.finish()
}

/// Lazily traced solution path: pieces are produced from the top of the
/// interval downward, only as far as callers ask.
pub struct PathTracer<'a> {
    lp: &'a ParametricLp,
    engine: Engine<'a>,
    a_min: f64,
    a_max: f64,
    status: LpStatus,
    top: f64,
    top_basis: Vec<usize>,
    pieces_desc: Vec<PathPiece>,
    a_cur: f64,
    upper: f64,
    done: bool,
    degenerate_run: usize,
    path_pivots: usize,
}

impl<'a> PathTracer<'a> {
    /// Solve at `a_max` (from `warm` if given) and prepare to trace down.
    pub fn new(
        lp: &'a ParametricLp,
        a_min: f64,
        a_max: f64,
        warm: Option<&[usize]>,
    ) -> Result<Self> {
        if !(a_min.is_finite() && a_max.is_finite() && a_min < a_max) {
            return Err(Error::Domain(format!(
                "need finite a_min < a_max, got [{a_min}, {a_max}]"
            )));
        }
        let mut engine = Engine::new(lp);
        if let Some(b) = warm {
            if !engine.load_basis(b) {
                engine = Engine::new(lp);
            }
        }
        let mut top = a_max;
        let mut outcome = engine.solve(top)?;
        if outcome == Outcome::Infeasible {
            // Largest feasible parameter in range, from an auxiliary program.
            match largest_feasible_parameter(lp, a_min, a_max)? {
                None => {}
                Some(a) => {
                    top = a;
                    engine = Engine::new(lp);
                    outcome = engine.solve(top)?;
                    if outcome == Outcome::Infeasible {
                        return Err(Error::Solver(format!(
                            "program reported feasible at a = {top} by the auxiliary problem but not by the solver"
                        )));
                    }
                }
            }
        }
        let status = match outcome {
            Outcome::Optimal => LpStatus::Optimal,
            Outcome::Unbounded => LpStatus::Unbounded,
            Outcome::Infeasible => LpStatus::Infeasible,
        };
        let top_basis = engine.basis();
        Ok(Self {
            lp,
            engine,
            a_min,
            a_max,
            status,
            top,
            top_basis,
            pieces_desc: Vec::new(),
            a_cur: top,
            upper: top,
            done: status != LpStatus::Optimal,
            degenerate_run: 0,
            path_pivots: 0,
        })
    }

    pub fn status(&self) -> LpStatus {
        self.status
    }

    /// Largest feasible parameter (the top of the traced path).
    pub fn top(&self) -> Option<f64> {
        (self.status == LpStatus::Optimal).then_some(self.top)
    }

    /// Optimal basis at the top, usable as a warm start for a nearby program.
    pub fn top_basis(&self) -> &[usize] {
        &self.top_basis
    }

    pub fn program(&self) -> &ParametricLp {
        self.lp
    }

    /// Lowest parameter covered so far.
    pub fn covered_low(&self) -> f64 {
        self.pieces_desc.last().map_or(self.top, |p| p.a_lo)
    }

    /// Trace until `a` is covered or the path ends.
    pub fn extend_to(&mut self, a: f64) -> Result<()> {
        while !self.done && (self.pieces_desc.is_empty() || self.covered_low() > a) {
            self.step()?;
        }
        Ok(())
    }

    /// Optimal solution at `a`, or None where the program is infeasible.
    pub fn evaluate(&mut self, a: f64) -> Result<Option<Vec<f64>>> {
        if self.status != LpStatus::Optimal || a > self.top || a < self.a_min {
            return Ok(None);
        }
        self.extend_to(a)?;
        let idx = self.pieces_desc.partition_point(|p| p.a_lo > a);
        Ok(self
            .pieces_desc
            .get(idx)
            .filter(|p| p.contains(a))
            .map(|p| {
                let mut x = vec![0.0; self.lp.num_vars()];
                p.fill(a, &mut x);
                x
            }))
    }

    fn step(&mut self) -> Result<()> {
        let engine = &mut self.engine;
        let pivot_cap = 50 * (engine.m + engine.n).max(1);
        let degenerate_cap = 10 * engine.m.max(1) + 100;
        let next = engine.next_breakpoint_below(self.a_cur);
        let lo = next.map_or(self.a_min, |(at, _)| at.max(self.a_min));
        if self.upper - lo > MERGE_TOL * (1.0 + self.upper.abs()) || self.pieces_desc.is_empty() {
            self.pieces_desc.push(snapshot(engine, lo, self.upper));
            self.upper = lo;
            self.degenerate_run = 0;
        } else {
            self.degenerate_run += 1;
            if self.degenerate_run > degenerate_cap {
                return Err(Error::Solver(format!(
                    "degenerate breakpoints accumulated at a = {}",
                    self.a_cur
                )));
            }
        }
        let Some((at, leaving)) = next else {
            self.done = true;
            return Ok(());
        };
        if at <= self.a_min {
            self.done = true;
            return Ok(());
        }
        self.path_pivots += 1;
        if self.path_pivots > pivot_cap {
            return Err(Error::Solver(
                "pivot cap reached while tracing the path".into(),
            ));
        }
        if !engine.dual_pivot(leaving)? {
            self.done = true;
            return Ok(());
        }
        self.a_cur = at;
        Ok(())
    }

    /// Trace to the bottom of the interval and return the whole path.
    pub fn finish(mut self) -> Result<PathSolution> {
        let mut out = PathSolution {
            a_min: self.a_min,
            a_max: self.a_max,
            num_vars: self.lp.num_vars(),
            status: self.status,
            feasible_range: None,
            pieces: Vec::new(),
            pivots: 0,
        };
        if self.status != LpStatus::Optimal {
            out.pivots = self.engine.iterations;
            return Ok(out);
        }
        self.extend_to(self.a_min)?;
        let mut pieces = std::mem::take(&mut self.pieces_desc);
        pieces.reverse();
        let lo = pieces.first().map_or(self.top, |p| p.a_lo);
        out.feasible_range = Some((lo, self.top));
        out.pieces = pieces;
        out.pivots = self.engine.iterations;
        Ok(out)
    }
}

fn snapshot(engine: &Engine<'_>, a_lo: f64, a_hi: f64) -> PathPiece {
    let parts = engine.structural_parts();
    let support: Vec<usize> = parts.iter().map(|p| p.0).collect();
    let x0: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let x1: Vec<f64> = parts.iter().map(|p| p.2).collect();
    let obj0 = support
        .iter()
        .zip(&x0)
        .map(|(&j, v)| engine.cost_of(j) * v)
        .sum();
    let obj1 = support
        .iter()
        .zip(&x1)
        .map(|(&j, v)| engine.cost_of(j) * v)
        .sum();
    PathPiece {
        a_lo,
        a_hi,
        basis: engine.basis(),
        support,
        x0,
        x1,
        obj0,
        obj1,
    }
}

/// max a in [a_min, a_max] such that A x ≤ b0 + a·b1 has x ≥ 0, via the
/// program  min −t  s.t.  A x − t·b1 ≤ b0 + a_min·b1,  t ≤ a_max − a_min.
fn largest_feasible_parameter(lp: &ParametricLp, a_min: f64, a_max: f64) -> Result<Option<f64>> {
    let (m, n) = (lp.num_constraints(), lp.num_vars());
    let mut a = Matrix::zeros(m + 1, n + 1);
    for i in 0..m {
        a.row_mut(i)[..n].copy_from_slice(lp.matrix().row(i));
        a[(i, n)] = -lp.b1()[i];
    }
    a[(m, n)] = 1.0;
    let mut b = lp.rhs(a_min);
    b.push(a_max - a_min);
    let mut cost = vec![0.0; n + 1];
    cost[n] = -1.0;
    let aux = ParametricLp::new(cost, a, b, vec![0.0; m + 1])?;
    let res = super::solve_at(&aux, 0.0)?;
    Ok(match res.status {
        LpStatus::Optimal => {
            let t = res.x.expect("optimal has x")[n];
            Some((a_min + t).min(a_max))
        }
        _ => None,
    })
}
