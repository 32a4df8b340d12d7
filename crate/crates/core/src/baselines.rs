//! Lasso by cyclic coordinate descent and the debiased-Lasso Wald test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::stat_math::{normal_cdf, two_sided_critical};

pub const LASSO_TOL: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub coef: Vec<f64>,
    pub lambda: f64,
    /// Completed coordinate sweeps.
    pub iterations: usize,
    /// Largest violation of the subgradient conditions.
    pub kkt_violation: f64,
    /// Objective after each sweep, starting with the value at zero.
    pub objective_trace: Vec<f64>,
}

impl LassoFit {
    pub fn is_zero(&self) -> bool {
        self.coef.iter().all(|&c| c == 0.0)
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// (1/2n)‖Y − Wπ‖² + λ‖π‖₁.
pub fn lasso_objective(y: &[f64], w: &Matrix, coef: &[f64], lambda: f64) -> f64 {
    let fit = w.mul_vec(coef);
    let rss: f64 = y.iter().zip(fit).map(|(a, b)| (a - b) * (a - b)).sum();
    rss / (2.0 * y.len() as f64) + lambda * coef.iter().map(|c| c.abs()).sum::<f64>()
}

/// max_j of the subgradient violation for a candidate solution.
pub fn kkt_violation(y: &[f64], w: &Matrix, coef: &[f64], lambda: f64) -> f64 {
    let n = y.len() as f64;
    let fit = w.mul_vec(coef);
    let r: Vec<f64> = y.iter().zip(fit).map(|(a, b)| a - b).collect();
    let g = w.tr_mul_vec(&r);
    g.iter()
        .zip(coef)
        .map(|(&gj, &c)| {
            let gj = gj / n;
            if c != 0.0 {
                (gj - lambda * c.signum()).abs()
            } else {
                (gj.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Coordinate-descent minimizer of (1/2n)‖Y − Wπ‖² + λ‖π‖₁.
pub fn lasso(y: &[f64], w: &Matrix, lambda: f64) -> Result<LassoFit> {
    let (n, m) = (w.rows(), w.cols());
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    if y.len() != n {
        return Err(Error::Domain(format!(
            "response has {} rows, design has {n}",
            y.len()
        )));
    }
    let nf = n as f64;
    // Column-major copy for contiguous coordinate updates.
    let cols: Vec<Vec<f64>> = (0..m).map(|j| w.column(j)).collect();
    let sq: Vec<f64> = cols.iter().map(|c| dot(c, c) / nf).collect();
    let mut coef = vec![0.0; m];
    let mut r = y.to_vec();
    let mut trace = vec![lasso_objective(y, w, &coef, lambda)];
    let mut sweeps = 0;
    loop {
        let mut max_change: f64 = 0.0;
        for j in 0..m {
            if sq[j] == 0.0 {
                continue;
            }
            let old = coef[j];
            let z = dot(&cols[j], &r) / nf + sq[j] * old;
            let new = soft_threshold(z, lambda) / sq[j];
            if new != old {
                let delta = new - old;
                for (ri, xij) in r.iter_mut().zip(&cols[j]) {
                    *ri -= delta * xij;
                }
                coef[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        sweeps += 1;
        let rss: f64 = r.iter().map(|v| v * v).sum();
        trace.push(rss / (2.0 * nf) + lambda * coef.iter().map(|c| c.abs()).sum::<f64>());
        if max_change < LASSO_TOL {
            break;
        }
        if sweeps >= LASSO_MAX_SWEEPS {
            let v = kkt_violation(y, w, &coef, lambda);
            return Err(Error::Solver(format!(
                "lasso did not converge in {LASSO_MAX_SWEEPS} sweeps (kkt violation {v:e})"
            )));
        }
    }
    Ok(LassoFit {
        kkt_violation: kkt_violation(y, w, &coef, lambda),
        coef,
        lambda,
        iterations: sweeps,
        objective_trace: trace,
    })
}

/// Precision matrix used in the debiasing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    Identity,
    Matrix(Matrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasedEstimate {
    /// π̂ + Θ̂Wᵀ(Y − Wπ̂)/n.
    pub point: Vec<f64>,
    pub precision_used: Precision,
    /// noise_scale · √((Θ̂Σ̂Θ̂)_jj / n).
    pub se: Vec<f64>,
    pub lasso: LassoFit,
}

/// Debiased Lasso with a supplied precision matrix and noise scale.
pub fn debias(
    y: &[f64],
    w: &Matrix,
    lambda: f64,
    precision: &Precision,
    noise_scale: f64,
) -> Result<DebiasedEstimate> {
    if !(noise_scale > 0.0 && noise_scale.is_finite()) {
        return Err(Error::Domain(format!(
            "noise_scale must be positive, got {noise_scale}"
        )));
    }
    let (n, m) = (w.rows(), w.cols());
    if let Precision::Matrix(t) = precision {
        if t.rows() != m || t.cols() != m {
            return Err(Error::Domain(format!(
                "precision must be {m}x{m}, got {}x{}",
                t.rows(),
                t.cols()
            )));
        }
    }
    let fit = lasso(y, w, lambda)?;
    let nf = n as f64;
    let wp = w.mul_vec(&fit.coef);
    let r: Vec<f64> = y.iter().zip(wp).map(|(a, b)| a - b).collect();
    let score: Vec<f64> = w.tr_mul_vec(&r).into_iter().map(|g| g / nf).collect();
    let (correction, diag) = match precision {
        Precision::Identity => {
            let diag: Vec<f64> = (0..m)
                .map(|j| w.column(j).iter().map(|v| v * v).sum::<f64>() / nf)
                .collect();
            (score, diag)
        }
        Precision::Matrix(t) => {
            let corr = t.mul_vec(&score);
            // (ΘΣ̂Θ)_jj = ‖W θ_j‖² / n with θ_j the j-th row of Θ.
            let diag = (0..m)
                .map(|j| {
                    let wt = w.mul_vec(t.row(j));
                    dot(&wt, &wt) / nf
                })
                .collect();
            (corr, diag)
        }
    };
    let point: Vec<f64> = fit
        .coef
        .iter()
        .zip(&correction)
        .map(|(a, b)| a + b)
        .collect();
    let se = diag.iter().map(|d| noise_scale * (d / nf).sqrt()).collect();
    Ok(DebiasedEstimate {
        point,
        precision_used: precision.clone(),
        se,
        lasso: fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldReport {
    pub beta0: f64,
    pub point: f64,
    pub se: f64,
    /// √n(β̃ − β₀) / (σ·√(Θ̂Σ̂Θ̂)_jj), signed.
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub lasso_iterations: usize,
    pub lasso_kkt_violation: f64,
    pub lasso_zero: bool,
}

/// Wald test of π_j = β₀ based on the debiased Lasso.
#[allow(clippy::too_many_arguments)]
pub fn debiased_wald_test(
    y: &[f64],
    w: &Matrix,
    tested_index: usize,
    beta0: f64,
    alpha: f64,
    lambda: f64,
    precision: &Precision,
    noise_scale: f64,
) -> Result<WaldReport> {
    let crit = two_sided_critical(alpha)?;
    if tested_index >= w.cols() {
        return Err(Error::Domain(format!(
            "tested_index {tested_index} out of range"
        )));
    }
    let est = debias(y, w, lambda, precision, noise_scale)?;
    let (point, se) = (est.point[tested_index], est.se[tested_index]);
    if !(se > 0.0) {
        return Err(Error::Domain(format!(
            "zero normalization for column {tested_index}"
        )));
    }
    let statistic = (point - beta0) / se;
    Ok(WaldReport {
        beta0,
        point,
        se,
        statistic,
        critical_value: crit,
        p_value: 2.0 * normal_cdf(-statistic.abs())?,
        reject: statistic.abs() > crit,
        lasso_iterations: est.lasso.iterations,
        lasso_kkt_violation: est.lasso.kkt_violation,
        lasso_zero: est.lasso.is_zero(),
    })
}
