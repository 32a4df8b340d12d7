//! Data-driven choice of the tuning value: â is the largest `a` whose fitted
//! residuals satisfy `a/2 ≤ crit(a) ≤ 3a/2`, with a fallback value when no
//! such `a` is found.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_at, solve_at_warm, LpStatus, PathTracer};
use crate::program::{
    build_gamma_program_with, build_theta_program_with, extract_coefficients,
    split_to_coefficients, tuning_criterion, BuildOptions, Dataset, FeasibilityMargins,
    RegressionProgram, Target,
};

/// Knobs of the search for the largest member of S.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub grid_points: usize,
    /// Grid bounds as multiples of c₀ = crit of the zero fit.
    pub lo_factor: f64,
    pub hi_factor: f64,
    /// Relative width at which bisection stops.
    pub rel_tol: f64,
    /// Slack in the two-sided membership check.
    pub slack: f64,
    /// Doublings of the upper bound tried while the top point is in S.
    pub max_extensions: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_points: 40,
            lo_factor: 1e-3,
            hi_factor: 4.0,
            rel_tol: 1e-4,
            slack: 1e-9,
            max_extensions: 8,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        let ok = self.grid_points >= 2
            && self.lo_factor > 0.0
            && self.hi_factor > self.lo_factor
            && self.rel_tol > 0.0
            && self.slack >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "invalid search configuration {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutReason {
    LpInfeasible,
    /// crit(a) > 3a/2.
    CriterionTooLarge,
    /// crit(a) < a/2.
    CriterionTooSmall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    InS,
    OutOfS(OutReason),
}

impl Membership {
    pub fn is_in(self) -> bool {
        self == Membership::InS
    }
}

fn classify(a: f64, crit: f64, slack: f64) -> Membership {
    let tol = slack * (1.0 + a);
    if crit > 1.5 * a + tol {
        Membership::OutOfS(OutReason::CriterionTooLarge)
    } else if crit + tol < 0.5 * a {
        Membership::OutOfS(OutReason::CriterionTooSmall)
    } else {
        Membership::InS
    }
}

/// Whether `a` belongs to S, from a fresh solve of the program at `a`.
pub fn membership(program: &RegressionProgram, a: f64) -> Result<Membership> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!(
            "tuning value must be finite and nonnegative, got {a}"
        )));
    }
    let res = solve_at(&program.lp, a)?;
    if res.status != LpStatus::Optimal {
        return Ok(Membership::OutOfS(OutReason::LpInfeasible));
    }
    let coef = extract_coefficients(&res, program.p())?.coef;
    Ok(classify(
        a,
        program.criterion(&coef),
        SearchConfig::default().slack,
    ))
}

/// Outcome of the search for â.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub a_hat: f64,
    /// False when S looked empty and `a_hat` is the fallback value.
    pub in_s: bool,
    pub c0: f64,
    /// Final search interval after any upward extension.
    pub search_lo: f64,
    pub search_hi: f64,
    pub extensions: usize,
    pub evaluations: usize,
}

/// Summary of one adaptive fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveFit {
    pub target: Target,
    pub coef: Vec<f64>,
    pub a_hat: f64,
    pub used_fallback: bool,
    pub residuals: Vec<f64>,
    pub criterion_at_a: f64,
    pub feasibility_margins: FeasibilityMargins,
    /// The LP solution carried a reducible common part in (b⁺, b⁻).
    pub lp_anomaly: bool,
    pub selection: Selection,
}

struct Searcher<'p> {
    program: &'p RegressionProgram,
    cfg: SearchConfig,
    evaluations: usize,
}

impl Searcher<'_> {
    fn eval(
        &mut self,
        tracer: &mut PathTracer<'_>,
        a: f64,
    ) -> Result<(Membership, Option<Vec<f64>>)> {
        self.evaluations += 1;
        let Some(x) = tracer.evaluate(a)? else {
            return Ok((Membership::OutOfS(OutReason::LpInfeasible), None));
        };
        let coef = split_to_coefficients(&x, self.program.p())?.coef;
        let crit = self.program.criterion(&coef);
        Ok((classify(a, crit, self.cfg.slack), Some(x)))
    }
}

/// Search for â along the solution path. Returns the selection, the LP
/// solution at â when one was found, and the optimal basis at the top.
fn search(
    program: &RegressionProgram,
    cfg: SearchConfig,
    warm: Option<&[usize]>,
) -> Result<(Selection, Option<Vec<f64>>, Vec<usize>)> {
    cfg.validate()?;
    let c0 = tuning_criterion(program.design(), &program.response_used);
    let mut sel = Selection {
        a_hat: program.fallback_a(),
        in_s: false,
        c0,
        search_lo: cfg.lo_factor * c0,
        search_hi: cfg.hi_factor * c0,
        extensions: 0,
        evaluations: 0,
    };
    if !(c0 > 0.0 && c0.is_finite()) {
        return Ok((sel, None, Vec::new()));
    }
    let lo = sel.search_lo;
    let hi = sel.search_hi;
    let ratio = (hi / lo).powf(1.0 / (cfg.grid_points - 1) as f64);
    let mut grid: Vec<f64> = (0..cfg.grid_points)
        .map(|k| lo * ratio.powi(k as i32))
        .collect();
    grid[cfg.grid_points - 1] = hi;

    let mut searcher = Searcher {
        program,
        cfg,
        evaluations: 0,
    };
    let mut basis: Option<Vec<usize>> = warm.map(<[usize]>::to_vec);

    // Grow the top while it still belongs to S.
    let mut tracer;
    loop {
        let top = *grid.last().expect("grid is nonempty");
        tracer = PathTracer::new(&program.lp, lo, top, basis.as_deref())?;
        basis = Some(tracer.top_basis().to_vec());
        let (m, _) = searcher.eval(&mut tracer, top)?;
        if !m.is_in() || sel.extensions >= cfg.max_extensions {
            break;
        }
        sel.extensions += 1;
        grid.push(2.0 * top);
    }
    sel.search_hi = *grid.last().expect("grid is nonempty");
    let top_basis = basis.unwrap_or_default();

    // Largest candidate in S, scanning downward.
    let mut found: Option<(usize, Vec<f64>)> = None;
    for k in (0..grid.len()).rev() {
        let (m, x) = searcher.eval(&mut tracer, grid[k])?;
        if m.is_in() {
            found = Some((k, x.expect("members have solutions")));
            break;
        }
    }
    let Some((k, mut x_in)) = found else {
        sel.evaluations = searcher.evaluations;
        return Ok((sel, None, top_basis));
    };

    // Refine between the member and the next candidate above it.
    let mut a_in = grid[k];
    if k + 1 < grid.len() {
        let mut a_out = grid[k + 1];
        while a_out - a_in > cfg.rel_tol * a_in {
            let mid = 0.5 * (a_in + a_out);
            let (m, x) = searcher.eval(&mut tracer, mid)?;
            if m.is_in() {
                a_in = mid;
                x_in = x.expect("members have solutions");
            } else {
                a_out = mid;
            }
        }
    }
    sel.a_hat = a_in;
    sel.in_s = true;
    sel.evaluations = searcher.evaluations;
    Ok((sel, Some(x_in), top_basis))
}

/// â for a program: (value, whether it came from S).
pub fn select_a_hat(program: &RegressionProgram) -> Result<(f64, bool)> {
    let (sel, _, _) = search(program, SearchConfig::default(), None)?;
    Ok((sel.a_hat, sel.in_s))
}

/// Full search result for a program.
pub fn select_with(program: &RegressionProgram, cfg: SearchConfig) -> Result<Selection> {
    Ok(search(program, cfg, None)?.0)
}

/// Fit a built program. `warm` is an optimal top basis from a closely
/// related program; the returned basis can be passed on the same way.
pub fn fit_program(
    program: &RegressionProgram,
    cfg: SearchConfig,
    warm: Option<&[usize]>,
) -> Result<(AdaptiveFit, Vec<usize>)> {
    let (sel, x, top_basis) = search(program, cfg, warm)?;
    let (x, a) = match x {
        Some(x) => (x, sel.a_hat),
        None => {
            let a = sel.a_hat;
            let res = if top_basis.is_empty() {
                solve_at(&program.lp, a)?
            } else {
                solve_at_warm(&program.lp, a, &top_basis)?
            };
            if res.status != LpStatus::Optimal {
                return Err(Error::FallbackInfeasible { a });
            }
            (res.x.expect("optimal result has a solution"), a)
        }
    };
    let split = split_to_coefficients(&x, program.p())?;
    let residuals = program.residuals(&split.coef);
    let criterion_at_a = tuning_criterion(program.design(), &residuals);
    let feasibility_margins = program.margins(&split.coef, a);
    let fit = AdaptiveFit {
        target: program.target,
        coef: program.to_original_units(split.coef),
        a_hat: a,
        used_fallback: !sel.in_s,
        residuals,
        criterion_at_a,
        feasibility_margins,
        lp_anomaly: split.anomaly,
        selection: sel,
    };
    Ok((fit, top_basis))
}

/// γ̂ for the pseudo-response V = Y − Zβ₀.
pub fn fit_gamma(data: &Dataset, beta0: f64) -> Result<AdaptiveFit> {
    let prog = build_gamma_program_with(data, beta0, BuildOptions::default())?;
    Ok(fit_program(&prog, SearchConfig::default(), None)?.0)
}

/// θ̂ for the regression of Z on X.
pub fn fit_theta(data: &Dataset) -> Result<AdaptiveFit> {
    let prog = build_theta_program_with(data, BuildOptions::default())?;
    Ok(fit_program(&prog, SearchConfig::default(), None)?.0)
}
