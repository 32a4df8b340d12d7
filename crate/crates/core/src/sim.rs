//! Data-generating processes and the Monte Carlo engine.
//!
//! Replication `k` draws everything from stream `k` of the master seed, so
//! results do not depend on scheduling or on the number of worker threads.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{debiased_wald_test, Precision};
use crate::error::{Error, Result};
use crate::inference;
use crate::linalg::Matrix;
use crate::program::Dataset;
use crate::stat_math::{RngStream, Tail, ToeplitzSpec};

/// Fraction of failed replications above which a run is an error.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DgpMode {
    /// W = (X columns) with Toeplitz rows, signal rule on π*, tested
    /// coefficient π*₃ (index 2).
    Sparse,
    /// W = (Z, X) with i.i.d. entries, γ* = a·p^{-1/2}·1, β* = 0.
    Dense { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub mode: DgpMode,
    pub n: usize,
    /// Sparse mode: columns of W. Dense mode: columns of X (W has p + 1).
    pub p: usize,
    pub design: Tail,
    pub rho: f64,
    pub error: Tail,
    /// Sparsity level s (sparse mode only).
    pub s: usize,
    /// Local alternative: the tested coefficient is shifted by h/√n.
    pub h: f64,
}

impl DgpSpec {
    pub fn sparse(n: usize, p: usize, rho: f64, design: Tail, error: Tail, s: usize) -> Self {
        Self { mode: DgpMode::Sparse, n, p, design, rho, error, s, h: 0.0 }
    }

    pub fn dense(n: usize, p: usize, a: f64) -> Self {
        Self { mode: DgpMode::Dense { a }, n, p, design: Tail::Gaussian, rho: 0.0, error: Tail::Gaussian, s: p, h: 0.0 }
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.n < 3 {
            return bad(format!("n must be at least 3, got {}", self.n));
        }
        match self.mode {
            DgpMode::Sparse => {
                if self.p < 4 {
                    return bad(format!("sparse design needs p >= 4, got {}", self.p));
                }
                if self.s < 1 || self.s > self.p {
                    return bad(format!("sparsity must lie in [1, p], got {}", self.s));
                }
            }
            DgpMode::Dense { a } => {
                if self.p < 1 || !a.is_finite() {
                    return bad(format!("dense design needs p >= 1 and finite a, got p={} a={a}", self.p));
                }
            }
        }
        if !self.h.is_finite() {
            return bad("h must be finite".into());
        }
        ToeplitzSpec::new(self.width(), self.rho)?;
        Ok(())
    }

    /// Columns of W.
    pub fn width(&self) -> usize {
        match self.mode {
            DgpMode::Sparse => self.p,
            DgpMode::Dense { .. } => self.p + 1,
        }
    }

    pub fn tested_index(&self) -> usize {
        match self.mode {
            DgpMode::Sparse => 2,
            DgpMode::Dense { .. } => 0,
        }
    }

    /// Value of the tested coefficient under the null.
    pub fn null_value(&self) -> f64 {
        match self.mode {
            DgpMode::Sparse => 2.0 / (self.n as f64).sqrt(),
            DgpMode::Dense { .. } => 0.0,
        }
    }

    /// True value of the tested coefficient.
    pub fn truth(&self) -> f64 {
        self.null_value() + self.h / (self.n as f64).sqrt()
    }

    /// Columns of W other than the tested one that carry signal
    /// (sparse mode, 0-based).
    fn sparse_entry(&self, j: usize, rng: &mut impl Rng) -> f64 {
        let n = self.n as f64;
        let one_based = j + 1;
        let fixed = 2.0 / n.sqrt();
        match self.s {
            1 => {
                if one_based == 3 {
                    fixed
                } else {
                    0.0
                }
            }
            2 => {
                if one_based == 2 || one_based == 3 {
                    fixed
                } else {
                    0.0
                }
            }
            s => {
                if (2..=4).contains(&one_based) {
                    fixed
                } else if one_based > s.max(4) {
                    0.0
                } else {
                    rng.random_range(0.0..1.0) * 4.0 / n.sqrt()
                }
            }
        }
    }

    /// Coefficient vector on W; drawn from `rng` where the rule is random.
    pub fn coefficients(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut pi: Vec<f64> = match self.mode {
            DgpMode::Sparse => (0..self.p).map(|j| self.sparse_entry(j, rng)).collect(),
            DgpMode::Dense { a } => {
                let g = a / (self.p as f64).sqrt();
                std::iter::once(0.0).chain(std::iter::repeat_n(g, self.p)).collect()
            }
        };
        pi[self.tested_index()] = self.truth();
        pi
    }

    /// Second moments of W's rows.
    pub fn design_covariance(&self) -> Matrix {
        let mut c = ToeplitzSpec { dim: self.width(), rho: self.rho }.covariance();
        let v = self.design.variance();
        for i in 0..c.rows() {
            for j in 0..c.cols() {
                c[(i, j)] *= v;
            }
        }
        c
    }

    /// Inverse of [`Self::design_covariance`].
    pub fn design_precision(&self) -> Matrix {
        let mut c = ToeplitzSpec { dim: self.width(), rho: self.rho }.precision();
        let v = self.design.variance();
        for i in 0..c.rows() {
            for j in 0..c.cols() {
                c[(i, j)] /= v;
            }
        }
        c
    }

    /// κ = E u² / √(E ε² u²) with u the population residual of the tested
    /// column on the others; errors are independent of the design, so
    /// κ = √(E u² / E ε²).
    pub fn kappa(&self) -> f64 {
        let j = self.tested_index();
        let eu2 = 1.0 / self.design_precision()[(j, j)];
        (eu2 / self.error.variance()).sqrt()
    }
}

/// One synthetic dataset together with its true coefficients.
#[derive(Debug, Clone)]
pub struct Generated {
    pub data: Dataset,
    pub coefficients: Vec<f64>,
}

/// Draw (W, Y) from the stream: design rows first, then the random part of
/// the coefficients, then the errors.
pub fn generate(spec: &DgpSpec, stream: RngStream) -> Result<Generated> {
    spec.validate()?;
    let mut rng = stream.rng();
    let factor = ToeplitzSpec::new(spec.width(), spec.rho)?.factor()?;
    let w = factor.draw(spec.n, spec.design, &mut rng);
    let pi = spec.coefficients(&mut rng);
    let mean = w.mul_vec(&pi);
    let y: Vec<f64> = mean.into_iter().map(|m| m + spec.error.sample(&mut rng)).collect();
    let data = Dataset::new(y, w, spec.tested_index())?;
    Ok(Generated { data, coefficients: pi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Corrt,
    Debias,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Corrt => "corrt",
            Method::Debias => "debias",
        }
    }
}

/// λ, precision and noise scale for the debiased baseline under a DGP:
/// the dense mode uses λ = 16√(ln p / n) with identity precision; the
/// sparse mode uses λ = σ√(2 ln p / n) with the true precision and σ.
pub fn debias_setup(spec: &DgpSpec) -> (f64, Precision, f64) {
    let n = spec.n as f64;
    let sigma = spec.error.variance().sqrt();
    match spec.mode {
        DgpMode::Dense { .. } => (16.0 * ((spec.p as f64).ln() / n).sqrt(), Precision::Identity, sigma),
        DgpMode::Sparse => (
            sigma * (2.0 * (spec.p as f64).ln() / n).sqrt(),
            Precision::Matrix(spec.design_precision()),
            sigma,
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub stream_id: u64,
    pub seed: u64,
    pub t_stat: Option<f64>,
    pub reject: Option<bool>,
    pub a_hat_gamma: Option<f64>,
    pub a_hat_theta: Option<f64>,
    pub fallback_gamma: Option<bool>,
    pub fallback_theta: Option<bool>,
    /// Debias only: the Lasso estimate was identically zero.
    pub lasso_zero: Option<bool>,
    pub error: Option<String>,
    /// Not serialized, so that output files are reproducible.
    #[serde(skip)]
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub spec: DgpSpec,
    pub method: Method,
    pub alpha: f64,
    pub master_seed: u64,
    pub requested_reps: usize,
    /// Completed replications.
    pub reps: usize,
    pub failures: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub mc_stderr: f64,
    pub records: Vec<RepRecord>,
}

impl McResult {
    /// Share of completed replications whose Lasso estimate was zero.
    pub fn lasso_zero_rate(&self) -> Option<f64> {
        let flags: Vec<bool> = self.records.iter().filter_map(|r| r.lasso_zero).collect();
        (!flags.is_empty()).then(|| flags.iter().filter(|&&z| z).count() as f64 / flags.len() as f64)
    }
}

/// Header of the per-cell summary table.
pub const CSV_COLUMNS: [&str; 17] = [
    "mode", "n", "p", "design", "rho", "error", "s", "h", "a", "method", "alpha", "seed", "reps", "failures",
    "rejections", "rate", "stderr",
];

fn tail_name(t: Tail) -> &'static str {
    match t {
        Tail::Gaussian => "gaussian",
        Tail::StudentT3 => "student_t3",
    }
}

impl McResult {
    pub fn csv_row(&self) -> Vec<String> {
        let s = &self.spec;
        let (mode, a) = match s.mode {
            DgpMode::Sparse => ("sparse", String::new()),
            DgpMode::Dense { a } => ("dense", a.to_string()),
        };
        vec![
            mode.into(),
            s.n.to_string(),
            s.p.to_string(),
            tail_name(s.design).into(),
            s.rho.to_string(),
            tail_name(s.error).into(),
            s.s.to_string(),
            s.h.to_string(),
            a,
            self.method.name().into(),
            self.alpha.to_string(),
            self.master_seed.to_string(),
            self.reps.to_string(),
            self.failures.to_string(),
            self.rejections.to_string(),
            self.rejection_rate.to_string(),
            self.mc_stderr.to_string(),
        ]
    }
}

fn one_rep(spec: &DgpSpec, method: Method, alpha: f64, stream: RngStream) -> RepRecord {
    let start = Instant::now();
    let mut rec = RepRecord {
        stream_id: stream.stream_id,
        seed: stream.seed,
        t_stat: None,
        reject: None,
        a_hat_gamma: None,
        a_hat_theta: None,
        fallback_gamma: None,
        fallback_theta: None,
        lasso_zero: None,
        error: None,
        wall_time_ms: 0.0,
    };
    let outcome = generate(spec, stream).and_then(|g| match method {
        Method::Corrt => {
            let r = inference::test(&g.data, spec.null_value(), alpha)?;
            rec.t_stat = Some(r.t_stat);
            rec.reject = Some(r.reject);
            rec.a_hat_gamma = Some(r.gamma_fit.a_hat);
            rec.a_hat_theta = Some(r.theta_fit.a_hat);
            rec.fallback_gamma = Some(r.gamma_fit.used_fallback);
            rec.fallback_theta = Some(r.theta_fit.used_fallback);
            Ok(())
        }
        Method::Debias => {
            let (lambda, precision, sigma) = debias_setup(spec);
            let d = g.data.y();
            let r = debiased_wald_test(d, g.data.w(), spec.tested_index(), spec.null_value(), alpha, lambda, &precision, sigma)?;
            rec.t_stat = Some(r.statistic);
            rec.reject = Some(r.reject);
            rec.lasso_zero = Some(r.lasso_zero);
            Ok(())
        }
    });
    if let Err(e) = outcome {
        rec.t_stat = None;
        rec.reject = None;
        rec.error = Some(e.to_string());
    }
    rec.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    rec
}

/// Rejection frequency of `method` over `reps` replications.
pub fn run_mc(spec: &DgpSpec, method: Method, alpha: f64, reps: usize, master_seed: u64) -> Result<McResult> {
    spec.validate()?;
    if reps == 0 {
        return Err(Error::Parameter("reps must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let records: Vec<RepRecord> = (0..reps as u64)
        .into_par_iter()
        .map(|k| one_rep(spec, method, alpha, RngStream::new(master_seed, k)))
        .collect();
    let failures = records.iter().filter(|r| r.error.is_some()).count();
    if failures as f64 > MAX_FAILURE_RATE * reps as f64 {
        let first = records.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(Error::Harness(format!(
            "{failures} of {reps} replications failed (first error: {first})"
        )));
    }
    let done = reps - failures;
    let rejections = records.iter().filter(|r| r.reject == Some(true)).count();
    let rate = if done > 0 { rejections as f64 / done as f64 } else { 0.0 };
    Ok(McResult {
        spec: *spec,
        method,
        alpha,
        master_seed,
        requested_reps: reps,
        reps: done,
        failures,
        rejections,
        rejection_rate: rate,
        mc_stderr: if done > 0 { (rate * (1.0 - rate) / done as f64).sqrt() } else { 0.0 },
        records,
    })
}

/// One [`run_mc`] per value of h, all with the same master seed.
pub fn power_curve(
    spec: &DgpSpec,
    method: Method,
    alpha: f64,
    reps: usize,
    h_grid: &[f64],
    master_seed: u64,
) -> Result<Vec<McResult>> {
    h_grid.iter().map(|&h| run_mc(&spec.with_h(h), method, alpha, reps, master_seed)).collect()
}
