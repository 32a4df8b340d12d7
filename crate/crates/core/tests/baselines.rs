mod common;

use common::{gauss_solve, gaussian_matrix, gaussian_vec};
use corrt::baselines::{debiased_wald_test, kkt_violation, lasso, lasso_objective, Precision};
use corrt::linalg::Matrix;
use corrt::sim::{run_mc, DgpSpec, Method};
use corrt::stat_math::wald_size_distortion;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exact Lasso minimum for tiny m: every active set and sign pattern,
/// stationarity solved directly, best objective among consistent candidates.
fn lasso_by_enumeration(y: &[f64], w: &Matrix, lambda: f64) -> f64 {
    let (n, m) = (w.rows(), w.cols());
    let nf = n as f64;
    let mut best = lasso_objective(y, w, &vec![0.0; m], lambda);
    for mask in 1u32..(1 << m) {
        let act: Vec<usize> = (0..m).filter(|&j| mask >> j & 1 == 1).collect();
        for signs in 0u32..(1 << act.len()) {
            let s: Vec<f64> = (0..act.len()).map(|k| if signs >> k & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let g: Vec<Vec<f64>> = act
                .iter()
                .map(|&a| act.iter().map(|&b| (0..n).map(|i| w[(i, a)] * w[(i, b)]).sum::<f64>() / nf).collect())
                .collect();
            let rhs: Vec<f64> = act
                .iter()
                .zip(&s)
                .map(|(&a, sk)| (0..n).map(|i| w[(i, a)] * y[i]).sum::<f64>() / nf - lambda * sk)
                .collect();
            let Some(b) = gauss_solve(g, rhs) else { continue };
            if b.iter().zip(&s).any(|(bk, sk)| bk * sk <= 0.0) {
                continue;
            }
            let mut coef = vec![0.0; m];
            for (&a, &bk) in act.iter().zip(&b) {
                coef[a] = bk;
            }
            best = best.min(lasso_objective(y, w, &coef, lambda));
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lasso_matches_enumeration(seed in any::<u64>(), m in 1usize..5, lam in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = gaussian_matrix(&mut rng, 15, m);
        let y = gaussian_vec(&mut rng, 15);
        let fit = lasso(&y, &w, lam).unwrap();
        let exact = lasso_by_enumeration(&y, &w, lam);
        let got = lasso_objective(&y, &w, &fit.coef, lam);
        prop_assert!((got - exact).abs() <= 1e-7 * (1.0 + exact.abs()), "{} vs {}", got, exact);
        prop_assert!(kkt_violation(&y, &w, &fit.coef, lam) <= 1e-6);
    }

    #[test]
    fn lambda_above_max_correlation_gives_zero(seed in any::<u64>(), bump in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = gaussian_matrix(&mut rng, 20, 30);
        let y = gaussian_vec(&mut rng, 20);
        let lmax = w.tr_mul_vec(&y).iter().fold(0.0f64, |a, v| a.max(v.abs())) / 20.0;
        prop_assert!(lasso(&y, &w, lmax * (1.0 + bump)).unwrap().is_zero());
    }
}

#[test]
fn wald_report_is_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = gaussian_matrix(&mut rng, 50, 80);
    let y = gaussian_vec(&mut rng, 50);
    let r = debiased_wald_test(&y, &w, 3, 0.1, 0.05, 0.2, &Precision::Identity, 1.0).unwrap();
    assert!((r.statistic - (r.point - 0.1) / r.se).abs() < 1e-12);
    assert_eq!(r.reject, r.statistic.abs() > r.critical_value);
    assert!((0.0..=1.0).contains(&r.p_value));
}

#[test]
fn dense_nuisance_zeroes_the_lasso() {
    let r = run_mc(&DgpSpec::dense(200, 400, 3.0), Method::Debias, 0.05, 100, 41).unwrap();
    let zero = r.lasso_zero_rate().unwrap();
    assert!(zero >= 0.95, "P(zero) = {zero}");
}

#[test]
fn wald_size_at_zero_nuisance() {
    let r = run_mc(&DgpSpec::dense(200, 400, 0.0), Method::Debias, 0.05, 400, 42).unwrap();
    assert!((0.01..=0.10).contains(&r.rejection_rate), "rate {}", r.rejection_rate);
}

#[test]
fn wald_size_distorted_by_dense_nuisance() {
    let r = run_mc(&DgpSpec::dense(200, 400, 3.0), Method::Debias, 0.05, 400, 43).unwrap();
    let f = wald_size_distortion(0.05, 3.0).unwrap();
    assert!((r.rejection_rate - f).abs() <= 0.07, "rate {} limit {f}", r.rejection_rate);
}
