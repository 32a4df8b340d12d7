//! Dense simplex solver for linear programs whose right-hand side moves
//! with a scalar parameter:
//!
//! ```text
//! minimize cᵀx  subject to  A x ≤ b0 + a·b1,  x ≥ 0
//! ```
//!
//! The basis inverse is never formed at full size. With slacks for every
//! row, a basis is described by its basic structural columns `S` and the
//! rows `R` whose slacks are nonbasic; only the square block `A[R, S]` needs
//! an inverse, and that block stays small whenever few structurals are
//! basic. [`solve_at`] solves at a fixed parameter, [`solve_path`] follows
//! the optimum over a parameter interval with dual simplex pivots at each
//! breakpoint.

mod engine;
mod format;
mod path;

pub use format::write_lp_format;
pub use path::{solve_path, PathPiece, PathSolution, PathTracer};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use engine::Engine;

/// `minimize cᵀx  s.t.  A x ≤ b0 + a·b1, x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricLp {
    cost: Vec<f64>,
    a: Matrix,
    b0: Vec<f64>,
    b1: Vec<f64>,
}

impl ParametricLp {
    pub fn new(cost: Vec<f64>, a: Matrix, b0: Vec<f64>, b1: Vec<f64>) -> Result<Self> {
        if cost.len() != a.cols() || b0.len() != a.rows() || b1.len() != a.rows() {
            return Err(Error::Construction(format!(
                "inconsistent LP dimensions: c {}, A {}x{}, b0 {}, b1 {}",
                cost.len(),
                a.rows(),
                a.cols(),
                b0.len(),
                b1.len()
            )));
        }
        let finite = cost.iter().chain(&b0).chain(&b1).all(|v| v.is_finite()) && a.is_finite();
        if !finite {
            return Err(Error::Construction(
                "LP data contains non-finite entries".into(),
            ));
        }
        Ok(Self { cost, a, b0, b1 })
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn b0(&self) -> &[f64] {
        &self.b0
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn num_vars(&self) -> usize {
        self.a.cols()
    }

    pub fn num_constraints(&self) -> usize {
        self.a.rows()
    }

    /// Right-hand side b0 + a·b1.
    pub fn rhs(&self, a: f64) -> Vec<f64> {
        self.b0
            .iter()
            .zip(&self.b1)
            .map(|(u, v)| u + a * v)
            .collect()
    }

    /// b0 + a·b1 − A x.
    pub fn margins(&self, x: &[f64], a: f64) -> Vec<f64> {
        let ax = self.a.mul_vec(x);
        self.rhs(a).iter().zip(ax).map(|(r, v)| r - v).collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.cost, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Outcome of a single solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    /// Basic variables: index `j < n` is structural `j`, `n + i` is the
    /// slack of row `i`.
    pub basis: Vec<usize>,
    /// b0 + a·b1 − A x (empty unless optimal).
    pub slack_margins: Vec<f64>,
    /// Dual multipliers y ≤ 0 with Aᵀy ≤ c (optimal only).
    pub duals: Option<Vec<f64>>,
    /// Farkas vector y ≥ 0 with yᵀA ≥ 0 and yᵀ(b0 + a·b1) < 0 (infeasible only).
    pub certificate: Option<Vec<f64>>,
    pub iterations: usize,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// cᵀx − yᵀb for the returned primal/dual pair.
    pub fn duality_gap(&self, lp: &ParametricLp, a: f64) -> Option<f64> {
        let (obj, y) = (self.objective?, self.duals.as_ref()?);
        Some(obj - crate::linalg::dot(y, &lp.rhs(a)))
    }
}

/// Solve the program at parameter `a` from the all-slack basis.
pub fn solve_at(lp: &ParametricLp, a: f64) -> Result<LpResult> {
    if !a.is_finite() {
        return Err(Error::Domain(format!(
            "LP parameter must be finite, got {a}"
        )));
    }
    let mut engine = Engine::new(lp);
    engine.solve(a)?;
    Ok(engine.result(a))
}

/// Solve at `a` starting from a previously optimal basis. Falls back to a
/// cold start when the basis does not fit this program.
pub fn solve_at_warm(lp: &ParametricLp, a: f64, basis: &[usize]) -> Result<LpResult> {
    if !a.is_finite() {
        return Err(Error::Domain(format!(
            "LP parameter must be finite, got {a}"
        )));
    }
    let mut engine = Engine::new(lp);
    if !engine.load_basis(basis) {
        engine = Engine::new(lp);
    }
    engine.solve(a)?;
    Ok(engine.result(a))
}
