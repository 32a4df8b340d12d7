//! Assembly of the constrained ℓ1 regression programs as parametric LPs.
//!
//! For a response `V` and design `X` (n × p) the program at tuning value `a`
//! is
//!
//! ```text
//! minimize ‖γ‖₁  s.t.  ‖n⁻¹Xᵀ(V − Xγ)‖∞ ≤ η₀·a
//!                      ‖V − Xγ‖∞ ≤ ‖V‖₂ / ln²n
//!                      n⁻¹Vᵀ(V − Xγ) ≥ ρₙ·n⁻¹‖V‖₂²
//! ```
//!
//! with γ = b⁺ − b⁻. The gamma program uses `V = Y − Zβ₀`, the theta program
//! uses `V = Z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf, Matrix};
use crate::lp::{LpResult, LpStatus, ParametricLp};
use crate::stat_math::normal_upper_quantile;

/// Response vector plus full design; one column of `W` is the tested `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    y: Vec<f64>,
    w: Matrix,
    tested_index: usize,
    z: Vec<f64>,
    x: Matrix,
}

impl Dataset {
    pub fn new(y: Vec<f64>, w: Matrix, tested_index: usize) -> Result<Self> {
        let (n, cols) = (w.rows(), w.cols());
        if y.len() != n {
            return Err(Error::Construction(format!(
                "response has {} rows, design has {n}",
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::Construction(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if cols < 2 {
            return Err(Error::Construction(format!(
                "design needs the tested column plus at least one control, got {cols} columns"
            )));
        }
        if tested_index >= cols {
            return Err(Error::Construction(format!(
                "tested_index {tested_index} out of range for {cols} columns"
            )));
        }
        if !w.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Construction(
                "data contains non-finite values".into(),
            ));
        }
        let z = w.column(tested_index);
        let x = w.without_column(tested_index);
        Ok(Self {
            y,
            w,
            tested_index,
            z,
            x,
        })
    }

    pub fn n(&self) -> usize {
        self.w.rows()
    }

    /// Number of control columns (columns of `X`).
    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn tested_index(&self) -> usize {
        self.tested_index
    }

    /// V = Y − Z·β₀.
    pub fn pseudo_response(&self, beta0: f64) -> Vec<f64> {
        self.y
            .iter()
            .zip(&self.z)
            .map(|(y, z)| y - z * beta0)
            .collect()
    }

    /// Copy with the response multiplied by `c`.
    pub fn scale_response(&self, c: f64) -> Result<Self> {
        Self::new(
            self.y.iter().map(|v| c * v).collect(),
            self.w.clone(),
            self.tested_index,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Gamma,
    Theta,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Rescale each column of `X` to unit root-mean-square before building;
    /// coefficients are mapped back to the original units.
    pub prescale: bool,
}

/// Slack of each analytic constraint at a given coefficient vector; all
/// three are nonnegative at a feasible point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityMargins {
    /// η₀·a − ‖n⁻¹Xᵀr‖∞
    pub gradient: f64,
    /// ‖V‖₂/ln²n − ‖r‖∞
    pub sup_norm: f64,
    /// n⁻¹Vᵀr − ρₙ·n⁻¹‖V‖₂²
    pub correlation: f64,
}

impl FeasibilityMargins {
    pub fn min(&self) -> f64 {
        self.gradient.min(self.sup_norm).min(self.correlation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionProgram {
    pub lp: ParametricLp,
    pub target: Target,
    pub response_used: Vec<f64>,
    pub eta0: f64,
    pub rho_n: f64,
    /// ‖V‖₂ / ln²n.
    pub sup_bound: f64,
    /// Design the program was built from (after optional prescaling).
    design: Matrix,
    /// Column multipliers applied by prescaling.
    col_scale: Option<Vec<f64>>,
}

impl RegressionProgram {
    pub fn n(&self) -> usize {
        self.design.rows()
    }

    pub fn p(&self) -> usize {
        self.design.cols()
    }

    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn is_prescaled(&self) -> bool {
        self.col_scale.is_some()
    }

    /// Split a program-space coefficient into LP variables (b⁺, b⁻).
    pub fn encode(&self, coef: &[f64]) -> Vec<f64> {
        let p = self.p();
        let mut x = vec![0.0; 2 * p];
        for (j, &g) in coef.iter().enumerate() {
            if g > 0.0 {
                x[j] = g;
            } else {
                x[p + j] = -g;
            }
        }
        x
    }

    /// Map program-space coefficients back to the units of the input design.
    pub fn to_original_units(&self, mut coef: Vec<f64>) -> Vec<f64> {
        if let Some(s) = &self.col_scale {
            for (c, s) in coef.iter_mut().zip(s) {
                *c *= s;
            }
        }
        coef
    }

    /// V − Xγ for a program-space coefficient vector.
    pub fn residuals(&self, coef: &[f64]) -> Vec<f64> {
        let fit = self.design.mul_vec(coef);
        self.response_used
            .iter()
            .zip(fit)
            .map(|(v, f)| v - f)
            .collect()
    }

    /// Tuning criterion of the residuals for program-space coefficients.
    pub fn criterion(&self, coef: &[f64]) -> f64 {
        tuning_criterion(&self.design, &self.residuals(coef))
    }

    /// Direct evaluation of the three constraints at `a`.
    pub fn margins(&self, coef: &[f64], a: f64) -> FeasibilityMargins {
        let n = self.n() as f64;
        let r = self.residuals(coef);
        let grad = self.design.tr_mul_vec(&r);
        let v = &self.response_used;
        FeasibilityMargins {
            gradient: self.eta0 * a - norm_inf(&grad) / n,
            sup_norm: self.sup_bound - norm_inf(&r),
            correlation: (dot(v, &r) - self.rho_n * dot(v, v)) / n,
        }
    }

    /// 2‖X‖∞‖V‖₂/√n.
    pub fn fallback_a(&self) -> f64 {
        2.0 * self.design.max_abs() * norm2(&self.response_used) / (self.n() as f64).sqrt()
    }
}

/// η₀ = 1.1·n^{-1/2}·Φ⁻¹(1 − 1/(pn)).
pub fn eta0(n: usize, p: usize) -> Result<f64> {
    let tail = 1.0 / (p as f64 * n as f64);
    Ok(1.1 * normal_upper_quantile(tail)? / (n as f64).sqrt())
}

/// ρₙ = 0.01 / √(ln n).
pub fn rho_n(n: usize) -> f64 {
    0.01 / (n as f64).ln().sqrt()
}

/// √(max_j n⁻¹ Σᵢ x²ᵢⱼ r²ᵢ).
pub fn tuning_criterion(x: &Matrix, r: &[f64]) -> f64 {
    let n = x.rows();
    let mut acc = vec![0.0; x.cols()];
    for (i, &ri) in r.iter().enumerate().take(n) {
        if ri == 0.0 {
            continue;
        }
        for (a, &xij) in acc.iter_mut().zip(x.row(i)) {
            *a += xij * xij * ri * ri;
        }
    }
    (acc.into_iter().fold(0.0, f64::max) / n as f64).sqrt()
}

pub fn build_gamma_program(data: &Dataset, beta0: f64) -> Result<RegressionProgram> {
    build_gamma_program_with(data, beta0, BuildOptions::default())
}

pub fn build_gamma_program_with(
    data: &Dataset,
    beta0: f64,
    opts: BuildOptions,
) -> Result<RegressionProgram> {
    GammaFamily::new(data, opts).program(beta0)
}

/// Gamma programs for many values of β₀ over one dataset, sharing the
/// design-only pieces.
#[derive(Debug, Clone)]
pub struct GammaFamily<'d> {
    data: &'d Dataset,
    opts: BuildOptions,
    prepared: Option<Prepared>,
}

impl<'d> GammaFamily<'d> {
    pub fn new(data: &'d Dataset, opts: BuildOptions) -> Self {
        Self {
            data,
            opts,
            prepared: None,
        }
    }

    pub fn program(&mut self, beta0: f64) -> Result<RegressionProgram> {
        if !beta0.is_finite() {
            return Err(Error::Domain(format!("beta0 must be finite, got {beta0}")));
        }
        let prepared = match self.prepared.take() {
            Some(p) => p,
            None => Prepared::new(self.data.x(), self.opts)?,
        };
        let out = prepared.build(self.data.pseudo_response(beta0), Target::Gamma);
        self.prepared = Some(prepared);
        out
    }
}

pub fn build_theta_program(data: &Dataset) -> Result<RegressionProgram> {
    build_theta_program_with(data, BuildOptions::default())
}

pub fn build_theta_program_with(data: &Dataset, opts: BuildOptions) -> Result<RegressionProgram> {
    build(data.x(), data.z().to_vec(), Target::Theta, opts)
}

fn build(x: &Matrix, v: Vec<f64>, target: Target, opts: BuildOptions) -> Result<RegressionProgram> {
    Prepared::new(x, opts)?.build(v, target)
}

/// Design-only parts of a program.
#[derive(Debug, Clone)]
struct Prepared {
    design: Matrix,
    col_scale: Option<Vec<f64>>,
    gram: Matrix,
    eta0: f64,
    rho: f64,
}

impl Prepared {
    fn new(x: &Matrix, opts: BuildOptions) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        if n < 3 {
            return Err(Error::Construction(format!(
                "need n >= 3 so that ln²n > 0 is usable, got {n}"
            )));
        }
        let (design, col_scale) = if opts.prescale {
            let scale: Vec<f64> = (0..p)
                .map(|j| {
                    let c = x.column(j);
                    let rms = norm2(&c) / (n as f64).sqrt();
                    if rms > 0.0 {
                        1.0 / rms
                    } else {
                        1.0
                    }
                })
                .collect();
            (
                Matrix::from_fn(n, p, |i, j| x[(i, j)] * scale[j]),
                Some(scale),
            )
        } else {
            (x.clone(), None)
        };
        let gram = design.gram(n as f64);
        Ok(Self {
            design,
            col_scale,
            gram,
            eta0: eta0(n, p)?,
            rho: rho_n(n),
        })
    }

    fn build(&self, v: Vec<f64>, target: Target) -> Result<RegressionProgram> {
        let design = &self.design;
        let (n, p) = (design.rows(), design.cols());
        let vnorm = norm2(&v);
        if vnorm == 0.0 {
            let what = match target {
                Target::Gamma => "pseudo-response V",
                Target::Theta => "tested column Z",
            };
            return Err(Error::Construction(format!("{what} is identically zero")));
        }
        let nf = n as f64;
        let (eta0, rho) = (self.eta0, self.rho);
        let ln = nf.ln();
        let delta = vnorm / (ln * ln);
        let g = &self.gram;
        let xtv: Vec<f64> = design.tr_mul_vec(&v).into_iter().map(|t| t / nf).collect();
        let m = 2 * p + 2 * n + 1;
        let mut a = Matrix::zeros(m, 2 * p);
        let mut b0 = Vec::with_capacity(m);
        let mut b1 = vec![0.0; m];

        for k in 0..p {
            let row = a.row_mut(k);
            for j in 0..p {
                row[j] = g[(k, j)];
                row[p + j] = -g[(k, j)];
            }
            b0.push(xtv[k]);
            b1[k] = eta0;
        }
        for k in 0..p {
            let row = a.row_mut(p + k);
            for j in 0..p {
                row[j] = -g[(k, j)];
                row[p + j] = g[(k, j)];
            }
            b0.push(-xtv[k]);
            b1[p + k] = eta0;
        }
        for i in 0..n {
            let xi = design.row(i).to_vec();
            let row = a.row_mut(2 * p + i);
            row[..p].copy_from_slice(&xi);
            for (r, &xv) in row[p..].iter_mut().zip(&xi) {
                *r = -xv;
            }
            b0.push(v[i] + delta);
        }
        for i in 0..n {
            let xi = design.row(i).to_vec();
            let row = a.row_mut(2 * p + n + i);
            for (r, &xv) in row[..p].iter_mut().zip(&xi) {
                *r = -xv;
            }
            row[p..].copy_from_slice(&xi);
            b0.push(-v[i] + delta);
        }
        let row = a.row_mut(m - 1);
        for j in 0..p {
            row[j] = xtv[j];
            row[p + j] = -xtv[j];
        }
        b0.push((1.0 - rho) * dot(&v, &v) / nf);

        let lp = ParametricLp::new(vec![1.0; 2 * p], a, b0, b1)?;
        Ok(RegressionProgram {
            lp,
            target,
            response_used: v,
            eta0,
            rho_n: rho,
            sup_bound: delta,
            design: design.clone(),
            col_scale: self.col_scale.clone(),
        })
    }
}

/// Coefficients recovered from an LP solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    /// b⁺ − b⁻.
    pub coef: Vec<f64>,
    /// Σᵢ min(b⁺ᵢ, b⁻ᵢ): the amount removed by normalization.
    pub common_part: f64,
    /// The solver claimed optimality with a reducible common part.
    pub anomaly: bool,
}

const COMMON_PART_TOL: f64 = 1e-8;

/// γ = b⁺ − b⁻ from an optimal LP result with `2p` variables.
pub fn extract_coefficients(result: &LpResult, p: usize) -> Result<Coefficients> {
    if result.status != LpStatus::Optimal {
        return Err(Error::Contract(format!(
            "coefficients requested from a {:?} LP result",
            result.status
        )));
    }
    let x = result
        .x
        .as_ref()
        .ok_or_else(|| Error::Contract("optimal LP result carries no solution".into()))?;
    split_to_coefficients(x, p)
}

pub(crate) fn split_to_coefficients(x: &[f64], p: usize) -> Result<Coefficients> {
    if x.len() != 2 * p {
        return Err(Error::Contract(format!(
            "expected {} LP variables, got {}",
            2 * p,
            x.len()
        )));
    }
    let (plus, minus) = x.split_at(p);
    let mut common_part = 0.0;
    let mut anomaly = false;
    let coef = plus
        .iter()
        .zip(minus)
        .map(|(&u, &v)| {
            let c = u.min(v).max(0.0);
            common_part += c;
            anomaly |= c > COMMON_PART_TOL;
            u - v
        })
        .collect();
    Ok(Coefficients {
        coef,
        common_part,
        anomaly,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_at;

    fn toy() -> Dataset {
        // Z in column 0; X = rows of a 4x2 identity-padded block.
        let w = Matrix::from_rows(&[
            vec![0.5, 1.0, 0.0],
            vec![-1.0, 0.0, 1.0],
            vec![2.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        Dataset::new(vec![1.0; 4], w, 0).unwrap()
    }

    #[test]
    fn hand_assembled_blocks() {
        let d = toy();
        let prog = build_gamma_program(&d, 0.0).unwrap();
        let (n, p) = (4.0_f64, 2usize);
        assert_eq!(prog.lp.num_vars(), 4);
        assert_eq!(prog.lp.num_constraints(), 2 * 2 + 2 * 4 + 1);
        // n⁻¹XᵀX = diag(1/4, 1/4); n⁻¹XᵀV = (1/4, 1/4).
        let a = prog.lp.matrix();
        let want_rows: [[f64; 4]; 13] = [
            [0.25, 0.0, -0.25, 0.0],
            [0.0, 0.25, 0.0, -0.25],
            [-0.25, 0.0, 0.25, 0.0],
            [0.0, -0.25, 0.0, 0.25],
            [1.0, 0.0, -1.0, 0.0],
            [0.0, 1.0, 0.0, -1.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [-1.0, 0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.25, 0.25, -0.25, -0.25],
        ];
        for (i, row) in want_rows.iter().enumerate() {
            assert_eq!(a.row(i), row, "row {i}");
        }
        let delta = 2.0 / (n.ln() * n.ln());
        let rho = 0.01 / n.ln().sqrt();
        let want_b0 = [
            0.25,
            0.25,
            -0.25,
            -0.25,
            1.0 + delta,
            1.0 + delta,
            1.0 + delta,
            1.0 + delta,
            -1.0 + delta,
            -1.0 + delta,
            -1.0 + delta,
            -1.0 + delta,
            (1.0 - rho) * 1.0,
        ];
        for (g, w) in prog.lp.b0().iter().zip(want_b0) {
            assert!((g - w).abs() < 1e-15, "{g} vs {w}");
        }
        let eta = 1.1 * normal_upper_quantile(1.0 / (p as f64 * n)).unwrap() / n.sqrt();
        assert_eq!(prog.eta0, eta);
        assert_eq!(prog.rho_n, rho);
        for (i, &b) in prog.lp.b1().iter().enumerate() {
            assert_eq!(b, if i < 2 * p { eta } else { 0.0 });
        }
    }

    #[test]
    fn beta0_zero_uses_y() {
        let d = toy();
        assert_eq!(build_gamma_program(&d, 0.0).unwrap().response_used, d.y());
        let shifted = build_gamma_program(&d, 2.0).unwrap();
        assert_eq!(shifted.response_used, vec![0.0, 3.0, -3.0, 1.0]);
    }

    #[test]
    fn theta_program_ignores_beta0_and_counts_rows() {
        let d = toy();
        let a = build_theta_program(&d).unwrap();
        assert_eq!(a.lp.num_constraints(), 2 * d.p() + 2 * d.n() + 1);
        assert_eq!(a.response_used, d.z());
        assert_eq!(
            a,
            build_theta_program(&d.scale_response(5.0).unwrap()).unwrap()
        );
    }

    #[test]
    fn beta0_changes_only_response_rows() {
        let d = toy();
        let a = build_gamma_program(&d, 0.0).unwrap();
        let b = build_gamma_program(&d, 1.5).unwrap();
        assert_eq!(a.eta0, b.eta0);
        assert_eq!(a.rho_n, b.rho_n);
        assert_eq!(a.lp.b1(), b.lp.b1());
        let m = a.lp.num_constraints();
        for i in 0..m - 1 {
            assert_eq!(a.lp.matrix().row(i), b.lp.matrix().row(i));
        }
    }

    #[test]
    fn construction_errors() {
        let w = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let d = Dataset::new(vec![1.0, 2.0], w, 0).unwrap();
        assert!(matches!(
            build_theta_program(&d),
            Err(Error::Construction(_))
        ));
        let w = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let d = Dataset::new(vec![0.0; 3], w.clone(), 0).unwrap();
        assert!(matches!(
            build_gamma_program(&d, 0.0),
            Err(Error::Construction(_))
        ));
        let d = Dataset::new(
            vec![1.0; 3],
            Matrix::from_rows(&vec![vec![0.0, 1.0]; 3]).unwrap(),
            0,
        )
        .unwrap();
        assert!(matches!(
            build_theta_program(&d),
            Err(Error::Construction(_))
        ));
        assert!(Dataset::new(vec![1.0; 3], w.clone(), 2).is_err());
        assert!(Dataset::new(vec![1.0, f64::NAN, 0.0], w, 0).is_err());
    }

    #[test]
    fn criterion_examples() {
        let x = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert_eq!(tuning_criterion(&x, &[1.0, 1.0]), 1.0);
        assert_eq!(tuning_criterion(&x, &[0.0, 0.0]), 0.0);
        let x = Matrix::from_fn(6, 3, |i, j| ((i * 3 + j) as f64 * 0.77).sin());
        let r: Vec<f64> = (0..6).map(|i| (i as f64 * 1.3).cos()).collect();
        let mut best = 0.0_f64;
        for j in 0..3 {
            let mut s = 0.0;
            for i in 0..6 {
                s += x[(i, j)] * x[(i, j)] * r[i] * r[i];
            }
            best = best.max(s / 6.0);
        }
        assert_eq!(tuning_criterion(&x, &r), best.sqrt());
    }

    #[test]
    fn extraction_examples() {
        let c = split_to_coefficients(&[1.0, 0.0, 0.0, 2.0], 2).unwrap();
        assert_eq!(c.coef, vec![1.0, -2.0]);
        assert!(!c.anomaly);
        let c = split_to_coefficients(&[3.0, 1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(c.coef, vec![2.0, 0.0]);
        assert_eq!(c.common_part, 2.0);
        assert!(c.anomaly);
        let c = split_to_coefficients(&[0.0; 4], 2).unwrap();
        assert_eq!(c.coef, vec![0.0, 0.0]);
    }

    #[test]
    fn extraction_requires_optimal() {
        let lp = ParametricLp::new(
            vec![1.0],
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            vec![-1.0],
            vec![0.0],
        )
        .unwrap();
        let r = solve_at(&lp, 0.0).unwrap();
        assert!(matches!(
            extract_coefficients(&r, 1),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn encode_then_extract_is_identity() {
        let d = toy();
        let prog = build_gamma_program(&d, 0.0).unwrap();
        let g = vec![-0.7, 1.25];
        let back = split_to_coefficients(&prog.encode(&g), 2).unwrap();
        assert_eq!(back.coef, g);
    }

    #[test]
    fn lp_margins_match_analytic_constraints() {
        let d = toy();
        let prog = build_gamma_program(&d, 0.3).unwrap();
        for g in [[0.0, 0.0], [0.5, -0.2], [0.9, 0.8]] {
            let a = 0.7;
            let lp_m = prog.lp.margins(&prog.encode(&g), a);
            let m = prog.margins(&g, a);
            let (p, n) = (d.p(), d.n());
            let grad = lp_m[..2 * p].iter().copied().fold(f64::INFINITY, f64::min);
            let sup = lp_m[2 * p..2 * p + 2 * n]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let corr = lp_m[2 * p + 2 * n];
            assert!((grad - m.gradient).abs() < 1e-12);
            assert!((sup - m.sup_norm).abs() < 1e-12);
            assert!((corr - m.correlation).abs() < 1e-12);
        }
    }
}
