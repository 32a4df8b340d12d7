//! The self-normalized correlation statistic, the test built on it, and
//! confidence sets by test inversion.

use serde::{Deserialize, Serialize};

use crate::adaptive::{fit_program, AdaptiveFit, SearchConfig};
use crate::baselines::lasso;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};
use crate::program::{build_theta_program_with, BuildOptions, Dataset, FeasibilityMargins, GammaFamily};
use crate::stat_math::{normal_cdf, two_sided_critical};

/// Relative size below which the denominator counts as zero.
pub const DEGENERATE_RATIO: f64 = 1e-24;

/// T = ε̂ᵀû / √(Σ ε̂²ᵢ û²ᵢ).
pub fn statistic(eps_hat: &[f64], u_hat: &[f64]) -> Result<f64> {
    Ok(statistic_parts(eps_hat, u_hat)?.0)
}

/// (T, denominator).
fn statistic_parts(eps: &[f64], u: &[f64]) -> Result<(f64, f64)> {
    if eps.len() != u.len() || eps.is_empty() {
        return Err(Error::Domain(format!(
            "residual vectors must have equal nonzero length, got {} and {}",
            eps.len(),
            u.len()
        )));
    }
    let n = eps.len() as f64;
    let den2: f64 = eps.iter().zip(u).map(|(e, v)| e * e * v * v).sum();
    let scale = (dot(eps, eps) / n) * (dot(u, u) / n);
    let threshold = DEGENERATE_RATIO * n * scale;
    if !(den2 > threshold) {
        return Err(Error::DegenerateStatistic { denominator: den2.sqrt(), threshold: threshold.sqrt() });
    }
    let den = den2.sqrt();
    Ok((dot(eps, u) / den, den))
}

/// Two-sided normal p-value 2(1 − Φ(|t|)).
pub fn p_value(t: f64) -> Result<f64> {
    Ok(2.0 * normal_cdf(-t.abs())?)
}

/// What a report keeps from an adaptive fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub a_hat: f64,
    pub used_fallback: bool,
    pub criterion_at_a: f64,
    pub margins: FeasibilityMargins,
    pub l1_norm: f64,
    pub lp_anomaly: bool,
}

impl From<&AdaptiveFit> for FitSummary {
    fn from(f: &AdaptiveFit) -> Self {
        Self {
            a_hat: f.a_hat,
            used_fallback: f.used_fallback,
            criterion_at_a: f.criterion_at_a,
            margins: f.feasibility_margins,
            l1_norm: f.coef.iter().map(|c| c.abs()).sum(),
            lp_anomaly: f.lp_anomaly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub beta0: f64,
    pub alpha: f64,
    pub t_stat: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub denominator: f64,
    pub gamma_fit: FitSummary,
    pub theta_fit: FitSummary,
}

fn report(beta0: f64, alpha: f64, gamma: &AdaptiveFit, theta: &AdaptiveFit) -> Result<TestReport> {
    let critical_value = two_sided_critical(alpha)?;
    let (t_stat, denominator) = statistic_parts(&gamma.residuals, &theta.residuals)?;
    Ok(TestReport {
        beta0,
        alpha,
        t_stat,
        critical_value,
        p_value: p_value(t_stat)?,
        reject: t_stat.abs() > critical_value,
        denominator,
        gamma_fit: gamma.into(),
        theta_fit: theta.into(),
    })
}

/// θ̂ for a dataset; independent of β₀, so one fit serves every test on it.
pub fn theta_fit(data: &Dataset) -> Result<AdaptiveFit> {
    let prog = build_theta_program_with(data, BuildOptions::default())?;
    Ok(fit_program(&prog, SearchConfig::default(), None)?.0)
}

/// Test H₀: β = β₀ at level α.
pub fn test(data: &Dataset, beta0: f64, alpha: f64) -> Result<TestReport> {
    two_sided_critical(alpha)?;
    let theta = theta_fit(data)?;
    test_with_theta(data, beta0, alpha, &theta)
}

/// Test with a precomputed θ̂.
pub fn test_with_theta(data: &Dataset, beta0: f64, alpha: f64, theta: &AdaptiveFit) -> Result<TestReport> {
    let prog = GammaFamily::new(data, BuildOptions::default()).program(beta0)?;
    let (gamma, _) = fit_program(&prog, SearchConfig::default(), None)?;
    report(beta0, alpha, &gamma, theta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiSearch {
    /// Grid centred at a debiased-Lasso estimate, widened while an endpoint
    /// is accepted.
    Auto,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiOptions {
    pub points: usize,
    /// Initial half-width in units of the centring standard error.
    pub half_width_se: f64,
    pub max_doublings: usize,
    /// Fit θ̂ once and reuse it at every grid point.
    pub reuse_theta: bool,
}

impl Default for CiOptions {
    fn default() -> Self {
        Self { points: 201, half_width_se: 10.0, max_doublings: 3, reuse_theta: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet {
    pub level: f64,
    pub grid: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub accepted: Vec<bool>,
    /// [min, max] of the accepted grid points.
    pub hull: Option<(f64, f64)>,
    /// Accepted points form a single run.
    pub contiguous: bool,
    pub center: Option<f64>,
    pub center_se: Option<f64>,
    pub doublings: usize,
    pub diagnostic: Option<String>,
    pub theta_fit: FitSummary,
}

impl ConfidenceSet {
    pub fn contains(&self, beta: f64) -> bool {
        self.hull.is_some_and(|(lo, hi)| lo <= beta && beta <= hi)
    }
}

/// Debiased-Lasso point estimate and standard error for the tested column,
/// used only to place the grid: λ = √(2 ln m / n)·sd(Y), diagonal
/// precision 1/Σ̂_jj, noise scale from the Lasso residuals.
pub fn centering_estimate(data: &Dataset) -> Result<(f64, f64)> {
    let (y, w, j) = (data.y(), data.w(), data.tested_index());
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sd = (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let z = data.z();
    let zz = dot(z, z);
    if zz == 0.0 {
        return Err(Error::Construction("tested column Z is identically zero".into()));
    }
    let lambda = (2.0 * (w.cols() as f64).ln() / n).sqrt() * sd.max(f64::MIN_POSITIVE);
    let fit = lasso(y, w, lambda)?;
    let fitted = w.mul_vec(&fit.coef);
    let r: Vec<f64> = y.iter().zip(fitted).map(|(a, b)| a - b).collect();
    let point = fit.coef[j] + dot(z, &r) / zz;
    let mut sigma = norm2(&r) / n.sqrt();
    if !(sigma > 0.0) {
        sigma = sd;
    }
    if !(sigma > 0.0) {
        sigma = 1.0;
    }
    Ok((point, sigma / zz.sqrt()))
}

fn linspace(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
}

struct Evaluated {
    t_stats: Vec<f64>,
    accepted: Vec<bool>,
}

fn evaluate_grid(data: &Dataset, grid: &[f64], crit: f64, theta: &AdaptiveFit, reuse: bool) -> Result<Evaluated> {
    let mut family = GammaFamily::new(data, BuildOptions::default());
    let mut warm: Option<Vec<usize>> = None;
    let mut t_stats = Vec::with_capacity(grid.len());
    let mut accepted = Vec::with_capacity(grid.len());
    for &b in grid {
        let refit;
        let prog = family.program(b)?;
        let (gamma, basis) = fit_program(&prog, SearchConfig::default(), warm.as_deref())?;
        warm = Some(basis);
        let theta_here = if reuse {
            theta
        } else {
            refit = theta_fit(data)?;
            &refit
        };
        let (t, _) = statistic_parts(&gamma.residuals, &theta_here.residuals)?;
        t_stats.push(t);
        accepted.push(t.abs() <= crit);
    }
    Ok(Evaluated { t_stats, accepted })
}

/// {β : |T(β)| ≤ Φ⁻¹(1 − α/2)} on a grid, α = 1 − level.
pub fn confidence_interval(data: &Dataset, level: f64, search: &CiSearch) -> Result<ConfidenceSet> {
    confidence_interval_with(data, level, search, CiOptions::default())
}

pub fn confidence_interval_with(
    data: &Dataset,
    level: f64,
    search: &CiSearch,
    opts: CiOptions,
) -> Result<ConfidenceSet> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("level must lie in (0, 1), got {level}")));
    }
    let crit = two_sided_critical(1.0 - level)?;
    let theta = theta_fit(data)?;
    let (grid, ev, center, center_se, doublings) = match search {
        CiSearch::Explicit(grid) => {
            if grid.is_empty() || grid.iter().any(|b| !b.is_finite()) {
                return Err(Error::Domain("explicit grid must be nonempty and finite".into()));
            }
            let ev = evaluate_grid(data, grid, crit, &theta, opts.reuse_theta)?;
            (grid.clone(), ev, None, None, 0)
        }
        CiSearch::Auto => {
            if opts.points < 2 || !(opts.half_width_se > 0.0) {
                return Err(Error::Parameter(format!("invalid grid options {opts:?}")));
            }
            let (center, se) = centering_estimate(data)?;
            let mut half = opts.half_width_se * se;
            let mut doublings = 0;
            loop {
                let grid = linspace(center - half, center + half, opts.points);
                let ev = evaluate_grid(data, &grid, crit, &theta, opts.reuse_theta)?;
                let edge = ev.accepted[0] || ev.accepted[grid.len() - 1];
                if !edge || doublings >= opts.max_doublings {
                    break (grid, ev, Some(center), Some(se), doublings);
                }
                doublings += 1;
                half *= 2.0;
            }
        }
    };
    let idx: Vec<usize> = (0..grid.len()).filter(|&k| ev.accepted[k]).collect();
    let hull = match (idx.first(), idx.last()) {
        (Some(&a), Some(&b)) => Some((grid[a], grid[b])),
        _ => None,
    };
    let contiguous = idx.windows(2).all(|w| w[1] == w[0] + 1);
    let diagnostic = if hull.is_none() {
        Some("no coverage on grid: every grid point was rejected".to_string())
    } else if !contiguous {
        Some("accepted grid points are not contiguous".to_string())
    } else if ev.accepted[0] || ev.accepted[grid.len() - 1] {
        Some("a grid endpoint is accepted; the set may extend beyond the grid".to_string())
    } else {
        None
    };
    Ok(ConfidenceSet {
        level,
        grid,
        t_stats: ev.t_stats,
        accepted: ev.accepted,
        hull,
        contiguous,
        center,
        center_se,
        doublings,
        diagnostic,
        theta_fit: (&theta).into(),
    })
}
