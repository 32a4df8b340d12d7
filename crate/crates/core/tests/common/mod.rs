//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use corrt::linalg::Matrix;
use corrt::lp::ParametricLp;
use corrt::stat_math::normal_quantile;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..m {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Minimum of cᵀx over every basic feasible solution of Ax + s = b(a),
/// (x, s) ≥ 0. None when no basis is feasible.
pub fn enumerate_vertices(lp: &ParametricLp, a: f64) -> Option<f64> {
    let (m, n) = (lp.num_constraints(), lp.num_vars());
    let b = lp.rhs(a);
    let col = |v: usize, i: usize| -> f64 {
        if v < n {
            lp.matrix()[(i, v)]
        } else if v - n == i {
            1.0
        } else {
            0.0
        }
    };
    let total = n + m;
    let mut best: Option<f64> = None;
    for mask in 0u64..(1u64 << total) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let vars: Vec<usize> = (0..total).filter(|&v| mask >> v & 1 == 1).collect();
        let basis: Vec<Vec<f64>> = (0..m).map(|i| vars.iter().map(|&v| col(v, i)).collect()).collect();
        let Some(z) = gauss_solve(basis, b.clone()) else { continue };
        if z.iter().any(|&v| v < -1e-9) {
            continue;
        }
        let obj: f64 = vars.iter().zip(&z).filter(|(&v, _)| v < n).map(|(&v, &zv)| lp.cost()[v] * zv).sum();
        best = Some(best.map_or(obj, |o: f64| o.min(obj)));
    }
    best
}

/// Random bounded program with at most `max_vars` variables and
/// `max_rows` constraints; the last row caps Σx so no program is unbounded.
pub fn random_small_lp(rng: &mut impl Rng, max_vars: usize, max_rows: usize) -> ParametricLp {
    let n = rng.random_range(1..=max_vars);
    let m = rng.random_range(2..=max_rows);
    let mut rows: Vec<Vec<f64>> =
        (0..m - 1).map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    rows.push(vec![1.0; n]);
    let mut b0: Vec<f64> = (0..m - 1).map(|_| rng.random_range(-2.0..4.0)).collect();
    b0.push(rng.random_range(2.0..6.0));
    let b1: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cost: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    ParametricLp::new(cost, Matrix::from_rows(&rows).unwrap(), b0, b1).unwrap()
}

pub fn gaussian_matrix(rng: &mut impl Rng, n: usize, p: usize) -> Matrix {
    Matrix::from_fn(n, p, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Slack of each constraint of the ℓ1 program at (V, X, γ, a), evaluated
/// from the definitions: gradient, sup-norm, correlation.
pub fn analytic_margins(v: &[f64], x: &Matrix, gamma: &[f64], a: f64) -> [f64; 3] {
    let (n, p) = (x.rows(), x.cols());
    let nf = n as f64;
    let mut resid = v.to_vec();
    for i in 0..n {
        for j in 0..p {
            resid[i] -= x[(i, j)] * gamma[j];
        }
    }
    let mut grad: f64 = 0.0;
    for j in 0..p {
        let s: f64 = (0..n).map(|i| x[(i, j)] * resid[i]).sum();
        grad = grad.max((s / nf).abs());
    }
    let eta0 = 1.1 / nf.sqrt() * normal_quantile(1.0 - 1.0 / (p as f64 * nf)).unwrap();
    let rho = 0.01 / nf.ln().sqrt();
    let vv: f64 = v.iter().map(|t| t * t).sum();
    let sup = resid.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    let corr: f64 = v.iter().zip(&resid).map(|(a, b)| a * b).sum::<f64>() / nf;
    [eta0 * a - grad, vv.sqrt() / nf.ln().powi(2) - sup, corr - rho * vv / nf]
}

/// max_j √(n⁻¹ Σ_i x_ij² r_i²) by a plain double loop.
pub fn naive_criterion(x: &Matrix, r: &[f64]) -> f64 {
    let n = x.rows();
    let mut best: f64 = 0.0;
    for j in 0..x.cols() {
        let mut s = 0.0;
        for i in 0..n {
            s += x[(i, j)] * x[(i, j)] * r[i] * r[i];
        }
        best = best.max((s / n as f64).sqrt());
    }
    best
}

/// Lower bound on min_γ ‖v − Xγ‖∞ from η = (I − P_X)v, which is orthogonal
/// to the columns of X: ‖v − Xγ‖∞ ≥ ηᵀv / ‖η‖₁. Needs n > rank(X).
pub fn sup_norm_lower_bound(x: &Matrix, v: &[f64]) -> f64 {
    let (n, p) = (x.rows(), x.cols());
    let gram: Vec<Vec<f64>> = (0..p)
        .map(|j| (0..p).map(|k| (0..n).map(|i| x[(i, j)] * x[(i, k)]).sum()).collect())
        .collect();
    let xtv: Vec<f64> = (0..p).map(|j| (0..n).map(|i| x[(i, j)] * v[i]).sum()).collect();
    let coef = gauss_solve(gram, xtv).expect("full column rank");
    let eta: Vec<f64> = (0..n).map(|i| v[i] - (0..p).map(|j| x[(i, j)] * coef[j]).sum::<f64>()).collect();
    let num: f64 = eta.iter().zip(v).map(|(a, b)| a * b).sum();
    let l1: f64 = eta.iter().map(|e| e.abs()).sum();
    num / l1
}

/// κ = E u² / √(E ε² u²) for the Toeplitz(ρ) Gaussian design, by Monte
/// Carlo: rows come from the AR(1) recursion (covariance ρ^|i−j|), θ* from
/// the population normal equations, ε ~ N(0, σ²) or t₃.
pub fn kappa_monte_carlo(
    p: usize,
    rho: f64,
    tested: usize,
    t3_errors: bool,
    draws: usize,
    rng: &mut impl Rng,
) -> f64 {
    let others: Vec<usize> = (0..p).filter(|&j| j != tested).collect();
    let cov = |i: usize, j: usize| rho.powi((i as i32 - j as i32).abs());
    let sxx: Vec<Vec<f64>> = others.iter().map(|&i| others.iter().map(|&j| cov(i, j)).collect()).collect();
    let sxz: Vec<f64> = others.iter().map(|&i| cov(i, tested)).collect();
    let theta = gauss_solve(sxx, sxz).unwrap();
    let innov = (1.0 - rho * rho).sqrt();
    let t3 = rand_distr::StudentT::new(3.0).unwrap();
    let (mut su2, mut se2u2) = (0.0, 0.0);
    let mut row = vec![0.0; p];
    for _ in 0..draws {
        row[0] = StandardNormal.sample(rng);
        for j in 1..p {
            let e: f64 = StandardNormal.sample(rng);
            row[j] = rho * row[j - 1] + innov * e;
        }
        let u = row[tested] - others.iter().zip(&theta).map(|(&j, t)| row[j] * t).sum::<f64>();
        let eps: f64 = if t3_errors { t3.sample(rng) } else { StandardNormal.sample(rng) };
        su2 += u * u;
        se2u2 += eps * eps * u * u;
    }
    let d = draws as f64;
    (su2 / d) / (se2u2 / d).sqrt()
}
