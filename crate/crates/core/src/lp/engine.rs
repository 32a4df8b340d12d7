//! Simplex working state over a slack-structured basis.
//!
//! Basic structurals occupy positions of `cols`, rows whose slack is
//! nonbasic occupy positions of `rows`; both lists always have the same
//! length `k`, and `kinv` holds the inverse of `K = A[rows, cols]` with
//! `kinv[j][i]` indexed by (structural position, row position).

use crate::error::{Error, Result};
use crate::linalg::dot;

use super::{LpResult, LpStatus, ParametricLp};

pub(super) const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

pub(super) struct Engine<'a> {
    lp: &'a ParametricLp,
    pub(super) m: usize,
    pub(super) n: usize,
    // Row-scaled copy of A (row-major m×n), and the scaled right-hand sides.
    a: Vec<f64>,
    row_scale: Vec<f64>,
    b0: Vec<f64>,
    b1: Vec<f64>,
    cost: Vec<f64>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    row_pos: Vec<usize>,
    col_pos: Vec<usize>,
    kinv: Vec<f64>,
    cap: usize,
    // Basic values split into b0 and b1 parts.
    xs0: Vec<f64>,
    xs1: Vec<f64>,
    slack0: Vec<f64>,
    slack1: Vec<f64>,
    // Reduced costs of all n + m variables.
    d: Vec<f64>,
    since_refactor: usize,
    pub(super) iterations: usize,
    pub(super) max_iterations: usize,
    stalled: usize,
    bland: bool,
    outcome: Option<Outcome>,
    // Farkas row (scaled) when infeasible.
    farkas: Option<Vec<f64>>,
}

impl<'a> Engine<'a> {
    pub(super) fn new(lp: &'a ParametricLp) -> Self {
        let m = lp.num_constraints();
        let n = lp.num_vars();
        let mut a = lp.matrix().as_slice().to_vec();
        let mut row_scale = vec![1.0; m];
        let mut b0 = lp.b0().to_vec();
        let mut b1 = lp.b1().to_vec();
        for i in 0..m {
            let row = &mut a[i * n..(i + 1) * n];
            let mx = row.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            if mx > 0.0 {
                let s = 1.0 / mx;
                row.iter_mut().for_each(|v| *v *= s);
                b0[i] *= s;
                b1[i] *= s;
                row_scale[i] = s;
            }
        }
        let cap = m.min(n);
        let mut engine = Engine {
            lp,
            m,
            n,
            a,
            row_scale,
            b0,
            b1,
            cost: lp.cost().to_vec(),
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            row_pos: vec![NONE; m],
            col_pos: vec![NONE; n],
            kinv: vec![0.0; cap * cap],
            cap,
            xs0: Vec::new(),
            xs1: Vec::new(),
            slack0: vec![0.0; m],
            slack1: vec![0.0; m],
            d: vec![0.0; n + m],
            since_refactor: 0,
            iterations: 0,
            max_iterations: 50 * (m + n).max(1),
            stalled: 0,
            bland: false,
            outcome: None,
            farkas: None,
        };
        engine.compute_values();
        engine.compute_reduced_costs();
        engine
    }

    /// Install a basis given as variable indices. Returns false if it is
    /// malformed or singular.
    pub(super) fn load_basis(&mut self, basis: &[usize]) -> bool {
        if basis.len() != self.m {
            return false;
        }
        let mut is_basic = vec![false; self.n + self.m];
        for &v in basis {
            if v >= self.n + self.m || is_basic[v] {
                return false;
            }
            is_basic[v] = true;
        }
        let cols: Vec<usize> = (0..self.n).filter(|&j| is_basic[j]).collect();
        let rows: Vec<usize> = (0..self.m).filter(|&i| !is_basic[self.n + i]).collect();
        if cols.len() != rows.len() {
            return false;
        }
        self.cols = cols;
        self.rows = rows;
        self.row_pos.iter_mut().for_each(|p| *p = NONE);
        self.col_pos.iter_mut().for_each(|p| *p = NONE);
        for (i, &r) in self.rows.iter().enumerate() {
            self.row_pos[r] = i;
        }
        for (j, &c) in self.cols.iter().enumerate() {
            self.col_pos[c] = j;
        }
        self.refactor().is_ok()
    }

    #[inline]
    fn k(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    fn ki(&self, j: usize, i: usize) -> f64 {
        self.kinv[j * self.cap + i]
    }

    pub(super) fn is_basic(&self, var: usize) -> bool {
        if var < self.n {
            self.col_pos[var] != NONE
        } else {
            self.row_pos[var - self.n] == NONE
        }
    }

    /// Rebuild the block inverse from scratch and refresh all derived state.
    pub(super) fn refactor(&mut self) -> Result<()> {
        let k = self.k();
        if k > 0 {
            let mut block = crate::linalg::Matrix::zeros(k, k);
            for (i, &r) in self.rows.iter().enumerate() {
                for (j, &c) in self.cols.iter().enumerate() {
                    block[(i, j)] = self.at(r, c);
                }
            }
            let inv = crate::linalg::invert(&block, 1e-13)
                .ok_or_else(|| Error::Solver(format!("basis block of size {k} is singular")))?;
            for j in 0..k {
                for i in 0..k {
                    self.kinv[j * self.cap + i] = inv[(j, i)];
                }
            }
        }
        self.since_refactor = 0;
        self.compute_values();
        self.compute_reduced_costs();
        Ok(())
    }

    fn compute_values(&mut self) {
        let k = self.k();
        let cap = self.cap;
        self.xs0.clear();
        self.xs1.clear();
        let br0: Vec<f64> = self.rows.iter().map(|&r| self.b0[r]).collect();
        let br1: Vec<f64> = self.rows.iter().map(|&r| self.b1[r]).collect();
        for j in 0..k {
            let row = &self.kinv[j * cap..j * cap + k];
            self.xs0.push(dot(row, &br0));
            self.xs1.push(dot(row, &br1));
        }
        for t in 0..self.m {
            if self.row_pos[t] != NONE {
                self.slack0[t] = 0.0;
                self.slack1[t] = 0.0;
                continue;
            }
            let arow = &self.a[t * self.n..(t + 1) * self.n];
            let (mut s0, mut s1) = (self.b0[t], self.b1[t]);
            for (j, &c) in self.cols.iter().enumerate() {
                let v = arow[c];
                if v != 0.0 {
                    s0 -= v * self.xs0[j];
                    s1 -= v * self.xs1[j];
                }
            }
            self.slack0[t] = s0;
            self.slack1[t] = s1;
        }
    }

    /// y_R = K⁻ᵀ c_S (zero on rows with basic slack).
    fn duals_scaled(&self) -> Vec<f64> {
        let k = self.k();
        let mut y = vec![0.0; k];
        for (j, &c) in self.cols.iter().enumerate() {
            let cj = self.cost[c];
            if cj != 0.0 {
                crate::linalg::axpy(cj, &self.kinv[j * self.cap..j * self.cap + k], &mut y);
            }
        }
        y
    }

    pub(super) fn compute_reduced_costs(&mut self) {
        let y = self.duals_scaled();
        let n = self.n;
        let mut d = self.cost.clone();
        for (i, &r) in self.rows.iter().enumerate() {
            if y[i] != 0.0 {
                crate::linalg::axpy(-y[i], &self.a[r * n..(r + 1) * n], &mut d);
            }
        }
        for j in 0..n {
            if self.col_pos[j] != NONE {
                d[j] = 0.0;
            }
        }
        self.d[..n].copy_from_slice(&d);
        for t in 0..self.m {
            self.d[n + t] = match self.row_pos[t] {
                NONE => 0.0,
                i => -y[i],
            };
        }
    }

    pub(super) fn set_cost(&mut self, cost: &[f64]) {
        self.cost.copy_from_slice(cost);
        self.compute_reduced_costs();
    }

    /// Basic variables with their values (b0 part, b1 part).
    fn basic_values(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let structural = self
            .cols
            .iter()
            .enumerate()
            .map(|(j, &c)| (c, self.xs0[j], self.xs1[j]));
        let slacks = (0..self.m)
            .filter(|&t| self.row_pos[t] == NONE)
            .map(|t| (self.n + t, self.slack0[t], self.slack1[t]));
        structural.chain(slacks)
    }

    pub(super) fn basis(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.basic_values().map(|(v, _, _)| v).collect();
        b.sort_unstable();
        b
    }

    /// Row of B⁻¹ belonging to a basic variable: entries over `rows`
    /// positions plus an optional unit entry on the leaving slack's row.
    fn btran(&self, leaving: usize) -> (Vec<f64>, Option<usize>) {
        let k = self.k();
        if leaving < self.n {
            let j = self.col_pos[leaving];
            (self.kinv[j * self.cap..j * self.cap + k].to_vec(), None)
        } else {
            let t = leaving - self.n;
            let mut rho = vec![0.0; k];
            for (j, &c) in self.cols.iter().enumerate() {
                let v = self.at(t, c);
                if v != 0.0 {
                    crate::linalg::axpy(-v, &self.kinv[j * self.cap..j * self.cap + k], &mut rho);
                }
            }
            (rho, Some(t))
        }
    }

    /// Pivot-row entries ρᵀ[A I] over all variables (basic entries zeroed).
    fn pivot_row(&self, rho: &[f64], extra: Option<usize>) -> Vec<f64> {
        let n = self.n;
        let mut alpha = vec![0.0; n + self.m];
        {
            let head = &mut alpha[..n];
            for (i, &r) in self.rows.iter().enumerate() {
                if rho[i] != 0.0 {
                    crate::linalg::axpy(rho[i], &self.a[r * n..(r + 1) * n], head);
                }
            }
            if let Some(t) = extra {
                crate::linalg::axpy(1.0, &self.a[t * n..(t + 1) * n], head);
            }
        }
        for (i, &r) in self.rows.iter().enumerate() {
            alpha[n + r] = rho[i];
        }
        for &c in &self.cols {
            alpha[c] = 0.0;
        }
        alpha
    }

    /// B⁻¹ times the column of `entering`: (structural part, slack part by row).
    fn ftran(&self, entering: usize) -> (Vec<f64>, Vec<f64>) {
        let k = self.k();
        let mut zs = vec![0.0; k];
        if entering < self.n {
            let u: Vec<f64> = self.rows.iter().map(|&r| self.at(r, entering)).collect();
            for (j, z) in zs.iter_mut().enumerate() {
                *z = dot(&self.kinv[j * self.cap..j * self.cap + k], &u);
            }
        } else {
            let i = self.row_pos[entering - self.n];
            for (j, z) in zs.iter_mut().enumerate() {
                *z = self.ki(j, i);
            }
        }
        let mut zslack = vec![0.0; self.m];
        for t in 0..self.m {
            if self.row_pos[t] != NONE {
                continue;
            }
            let mut v = if entering == self.n + t {
                1.0
            } else if entering < self.n {
                self.at(t, entering)
            } else {
                0.0
            };
            for (j, &c) in self.cols.iter().enumerate() {
                let a = self.at(t, c);
                if a != 0.0 {
                    v -= a * zs[j];
                }
            }
            zslack[t] = v;
        }
        (zs, zslack)
    }

    /// Swap `entering` into the basis in place of `leaving`.
    fn pivot(&mut self, entering: usize, leaving: usize, expected: f64) -> Result<()> {
        let n = self.n;
        let k = self.k();
        let cap = self.cap;
        let got = match (entering < n, leaving < n) {
            (true, false) => {
                // Block grows by row t and column q.
                let (q, t) = (entering, leaving - n);
                let u: Vec<f64> = self.rows.iter().map(|&r| self.at(r, q)).collect();
                let v: Vec<f64> = self.cols.iter().map(|&c| self.at(t, c)).collect();
                let ku: Vec<f64> = (0..k)
                    .map(|j| dot(&self.kinv[j * cap..j * cap + k], &u))
                    .collect();
                let mut vk = vec![0.0; k];
                for j in 0..k {
                    if v[j] != 0.0 {
                        crate::linalg::axpy(v[j], &self.kinv[j * cap..j * cap + k], &mut vk);
                    }
                }
                let sigma = self.at(t, q) - dot(&v, &ku);
                if sigma.abs() < 1e-14 {
                    return Err(Error::Solver("vanishing pivot while growing basis".into()));
                }
                for j in 0..k {
                    let f = ku[j] / sigma;
                    if f != 0.0 {
                        crate::linalg::axpy(f, &vk, &mut self.kinv[j * cap..j * cap + k]);
                    }
                    self.kinv[j * cap + k] = -f;
                }
                for i in 0..k {
                    self.kinv[k * cap + i] = -vk[i] / sigma;
                }
                self.kinv[k * cap + k] = 1.0 / sigma;
                self.cols.push(q);
                self.col_pos[q] = k;
                self.rows.push(t);
                self.row_pos[t] = k;
                sigma
            }
            (true, true) => {
                // Column replacement at position p.
                let (q, p) = (entering, self.col_pos[leaving]);
                let u: Vec<f64> = self.rows.iter().map(|&r| self.at(r, q)).collect();
                let g: Vec<f64> = (0..k)
                    .map(|j| dot(&self.kinv[j * cap..j * cap + k], &u))
                    .collect();
                let gp = g[p];
                if gp.abs() < 1e-14 {
                    return Err(Error::Solver("vanishing pivot in column exchange".into()));
                }
                let prow: Vec<f64> = self.kinv[p * cap..p * cap + k]
                    .iter()
                    .map(|v| v / gp)
                    .collect();
                for j in 0..k {
                    if j == p {
                        self.kinv[p * cap..p * cap + k].copy_from_slice(&prow);
                    } else if g[j] != 0.0 {
                        crate::linalg::axpy(-g[j], &prow, &mut self.kinv[j * cap..j * cap + k]);
                    }
                }
                self.col_pos[leaving] = NONE;
                self.cols[p] = q;
                self.col_pos[q] = p;
                gp
            }
            (false, false) => {
                // Row replacement: slack of row r enters, slack of row t leaves.
                let (r, t) = (entering - n, leaving - n);
                let i = self.row_pos[r];
                let mut h = vec![0.0; k];
                for (j, &c) in self.cols.iter().enumerate() {
                    let v = self.at(t, c);
                    if v != 0.0 {
                        crate::linalg::axpy(v, &self.kinv[j * cap..j * cap + k], &mut h);
                    }
                }
                let hi = h[i];
                if hi.abs() < 1e-14 {
                    return Err(Error::Solver("vanishing pivot in row exchange".into()));
                }
                for j in 0..k {
                    let row = &mut self.kinv[j * cap..j * cap + k];
                    let ci = row[i] / hi;
                    if ci != 0.0 {
                        for (l, hl) in h.iter().enumerate() {
                            row[l] -= hl * ci;
                        }
                    }
                    row[i] = ci;
                }
                self.row_pos[r] = NONE;
                self.rows[i] = t;
                self.row_pos[t] = i;
                -hi
            }
            (false, true) => {
                // Block shrinks: drop row of entering slack and column of leaving structural.
                let r = entering - n;
                let (i, p) = (self.row_pos[r], self.col_pos[leaving]);
                let piv = self.ki(p, i);
                if piv.abs() < 1e-14 {
                    return Err(Error::Solver(
                        "vanishing pivot while shrinking basis".into(),
                    ));
                }
                let prow: Vec<f64> = self.kinv[p * cap..p * cap + k].to_vec();
                for j in 0..k {
                    if j == p {
                        continue;
                    }
                    let row = &mut self.kinv[j * cap..j * cap + k];
                    let f = row[i] / piv;
                    if f != 0.0 {
                        crate::linalg::axpy(-f, &prow, row);
                    }
                }
                // Move the last row/column into the freed slots.
                let last = k - 1;
                if p != last {
                    for l in 0..k {
                        self.kinv[p * cap + l] = self.kinv[last * cap + l];
                    }
                }
                if i != last {
                    for j in 0..k {
                        self.kinv[j * cap + i] = self.kinv[j * cap + last];
                    }
                }
                self.col_pos[leaving] = NONE;
                self.cols.swap_remove(p);
                if p < self.cols.len() {
                    self.col_pos[self.cols[p]] = p;
                }
                self.row_pos[r] = NONE;
                self.rows.swap_remove(i);
                if i < self.rows.len() {
                    self.row_pos[self.rows[i]] = i;
                }
                piv
            }
        };
        self.iterations += 1;
        self.since_refactor += 1;
        let drift = (got.abs() - expected.abs()).abs() / expected.abs().max(1.0);
        if self.since_refactor >= REFACTOR_EVERY || drift > 1e-7 {
            self.refactor()?;
        } else {
            self.compute_values();
        }
        Ok(())
    }

    fn check_iterations(&self) -> Result<()> {
        if self.iterations >= self.max_iterations {
            Err(Error::Solver(format!(
                "iteration cap of {} pivots reached",
                self.max_iterations
            )))
        } else {
            Ok(())
        }
    }

    fn note_step(&mut self, degenerate: bool) {
        if degenerate {
            self.stalled += 1;
            if self.stalled > 10 * self.m.max(1) {
                self.bland = true;
            }
        } else {
            self.stalled = 0;
        }
    }

    /// Dual ratio test on a pivot row for a leaving variable whose value is
    /// negative. Returns the entering variable and its pivot entry.
    fn dual_ratio(&self, alpha: &[f64]) -> Option<(usize, f64)> {
        let mut bound = f64::INFINITY;
        for (j, &al) in alpha.iter().enumerate() {
            if al < -PIVOT_TOL && !self.is_basic(j) {
                bound = bound.min((self.d[j].max(0.0) + DUAL_TOL) / -al);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for (j, &al) in alpha.iter().enumerate() {
            if al < -PIVOT_TOL && !self.is_basic(j) && self.d[j].max(0.0) / -al <= bound {
                let better = match best {
                    None => true,
                    Some((bj, ba)) => {
                        if self.bland {
                            let ratio = self.d[j].max(0.0) / -al;
                            let bratio = self.d[bj].max(0.0) / -ba;
                            ratio < bratio - 1e-15 || (ratio <= bratio + 1e-15 && j < bj)
                        } else {
                            al.abs() > ba.abs()
                        }
                    }
                };
                if better {
                    best = Some((j, al));
                }
            }
        }
        best
    }

    /// One dual simplex pivot with a chosen leaving variable. Returns false
    /// when the row proves infeasibility.
    pub(super) fn dual_pivot(&mut self, leaving: usize) -> Result<bool> {
        let (rho, extra) = self.btran(leaving);
        let alpha = self.pivot_row(&rho, extra);
        let Some((q, aq)) = self.dual_ratio(&alpha) else {
            let mut y = vec![0.0; self.m];
            for (i, &r) in self.rows.iter().enumerate() {
                y[r] = rho[i];
            }
            if let Some(t) = extra {
                y[t] = 1.0;
            }
            self.farkas = Some(y);
            return Ok(false);
        };
        let theta = self.d[q] / aq;
        self.note_step(theta.abs() < 1e-12);
        for (j, &al) in alpha.iter().enumerate() {
            if al != 0.0 {
                self.d[j] -= theta * al;
            }
        }
        self.d[q] = 0.0;
        self.d[leaving] = -theta;
        self.pivot(q, leaving, aq)?;
        Ok(true)
    }

    /// Dual simplex at parameter `a`; requires a dual feasible basis.
    fn dual_simplex(&mut self, a: f64) -> Result<Outcome> {
        loop {
            self.check_iterations()?;
            let mut leaving: Option<(usize, f64)> = None;
            for (v, x0, x1) in self.basic_values() {
                let x = x0 + a * x1;
                if x < -PRIMAL_TOL {
                    let take = match leaving {
                        None => true,
                        Some((lv, lx)) => {
                            if self.bland {
                                v < lv
                            } else {
                                x < lx
                            }
                        }
                    };
                    if take {
                        leaving = Some((v, x));
                    }
                }
            }
            let Some((l, _)) = leaving else {
                return Ok(Outcome::Optimal);
            };
            if !self.dual_pivot(l)? {
                return Ok(Outcome::Infeasible);
            }
        }
    }

    /// Primal simplex at parameter `a`; requires a primal feasible basis.
    fn primal_simplex(&mut self, a: f64) -> Result<Outcome> {
        loop {
            self.check_iterations()?;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.n + self.m {
                let dj = self.d[j];
                if dj < -DUAL_TOL && !self.is_basic(j) {
                    let take = match entering {
                        None => true,
                        Some((_, bd)) => !self.bland && dj < bd,
                    };
                    if take {
                        entering = Some((j, dj));
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Ok(Outcome::Optimal);
            };
            let (zs, zslack) = self.ftran(q);
            // Harris two-pass ratio test over basic variables.
            let candidates: Vec<(usize, f64, f64)> = self
                .cols
                .iter()
                .enumerate()
                .map(|(j, &c)| (c, self.xs0[j] + a * self.xs1[j], zs[j]))
                .chain(
                    (0..self.m)
                        .filter(|&t| self.row_pos[t] == NONE)
                        .map(|t| (self.n + t, self.slack0[t] + a * self.slack1[t], zslack[t])),
                )
                .filter(|&(_, _, z)| z > PIVOT_TOL)
                .collect();
            if candidates.is_empty() {
                return Ok(Outcome::Unbounded);
            }
            let bound = candidates
                .iter()
                .map(|&(_, x, z)| (x.max(0.0) + PRIMAL_TOL) / z)
                .fold(f64::INFINITY, f64::min);
            let mut best: Option<(usize, f64, f64)> = None;
            for &(v, x, z) in &candidates {
                let ratio = x.max(0.0) / z;
                if ratio > bound {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bv, bx, bz)) => {
                        if self.bland {
                            let bratio = bx.max(0.0) / bz;
                            ratio < bratio - 1e-15 || (ratio <= bratio + 1e-15 && v < bv)
                        } else {
                            z > bz
                        }
                    }
                };
                if better {
                    best = Some((v, x, z));
                }
            }
            let (l, x, z) = best.expect("nonempty candidates");
            self.note_step(x.max(0.0) / z < 1e-12);
            self.pivot(q, l, z)?;
            self.compute_reduced_costs();
        }
    }

    /// Solve at parameter `a` from the current basis.
    pub(super) fn solve(&mut self, a: f64) -> Result<Outcome> {
        let real_cost = self.cost.clone();
        let dual_feasible =
            (0..self.n + self.m).all(|j| self.is_basic(j) || self.d[j] >= -DUAL_TOL);
        let outcome = if dual_feasible {
            self.dual_simplex(a)?
        } else {
            let primal_feasible = self
                .basic_values()
                .all(|(_, x0, x1)| x0 + a * x1 >= -PRIMAL_TOL);
            if !primal_feasible {
                // Composite start: drop negative costs so the slack basis is
                // dual feasible, reach primal feasibility, restore costs.
                self.load_basis(&((self.n..self.n + self.m).collect::<Vec<_>>()));
                let relaxed: Vec<f64> = real_cost.iter().map(|c| c.max(0.0)).collect();
                self.set_cost(&relaxed);
                let phase1 = self.dual_simplex(a)?;
                self.set_cost(&real_cost);
                if phase1 == Outcome::Infeasible {
                    self.outcome = Some(Outcome::Infeasible);
                    return Ok(Outcome::Infeasible);
                }
            }
            self.bland = false;
            self.stalled = 0;
            self.primal_simplex(a)?
        };
        self.outcome = Some(outcome);
        Ok(outcome)
    }

    /// Structural solution vector at parameter `a`.
    pub(super) fn structural(&self, a: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (j, &c) in self.cols.iter().enumerate() {
            x[c] = self.xs0[j] + a * self.xs1[j];
        }
        x
    }

    /// Sparse structural solution as (index, b0 part, b1 part).
    pub(super) fn structural_parts(&self) -> Vec<(usize, f64, f64)> {
        let mut v: Vec<(usize, f64, f64)> = self
            .cols
            .iter()
            .enumerate()
            .map(|(j, &c)| (c, self.xs0[j], self.xs1[j]))
            .collect();
        v.sort_unstable_by_key(|e| e.0);
        v
    }

    /// Unscaled dual multipliers, y ≤ 0.
    fn duals(&self) -> Vec<f64> {
        let ys = self.duals_scaled();
        let mut y = vec![0.0; self.m];
        for (i, &r) in self.rows.iter().enumerate() {
            y[r] = ys[i] * self.row_scale[r];
        }
        y
    }

    /// Next breakpoint below `a` for the current basis: the largest
    /// parameter at which a basic value reaches zero while decreasing `a`.
    pub(super) fn next_breakpoint_below(&self, a: f64) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize, f64)> = None;
        for (v, x0, x1) in self.basic_values() {
            if x1 <= 1e-12 {
                continue;
            }
            let at = (-x0 / x1).min(a);
            let take = match best {
                None => true,
                Some((ba, _, bx1)) => {
                    at > ba + 1e-12 * (1.0 + ba.abs())
                        || (at >= ba - 1e-12 * (1.0 + ba.abs()) && x1 > bx1)
                }
            };
            if take {
                best = Some((at, v, x1));
            }
        }
        best.map(|(at, v, _)| (at, v))
    }

    pub(super) fn result(&self, a: f64) -> LpResult {
        let status = match self.outcome {
            Some(Outcome::Optimal) => LpStatus::Optimal,
            Some(Outcome::Unbounded) => LpStatus::Unbounded,
            _ => LpStatus::Infeasible,
        };
        let basis = self.basis();
        match status {
            LpStatus::Optimal => {
                let x = self.structural(a);
                LpResult {
                    status,
                    objective: Some(self.lp.objective(&x)),
                    slack_margins: self.lp.margins(&x, a),
                    x: Some(x),
                    basis,
                    duals: Some(self.duals()),
                    certificate: None,
                    iterations: self.iterations,
                }
            }
            _ => LpResult {
                status,
                x: None,
                objective: None,
                basis,
                slack_margins: Vec::new(),
                duals: None,
                certificate: self
                    .farkas
                    .as_ref()
                    .map(|f| f.iter().zip(&self.row_scale).map(|(v, s)| v * s).collect()),
                iterations: self.iterations,
            },
        }
    }

    pub(super) fn cost_of(&self, j: usize) -> f64 {
        self.cost[j]
    }
}
