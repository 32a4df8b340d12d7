mod common;

use common::kappa_monte_carlo;
use corrt::sim::{generate, power_curve, run_mc, DgpSpec, McResult, Method};
use corrt::stat_math::{corrt_local_power, RngStream, Tail};
use corrt::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn json(r: &McResult) -> String {
    serde_json::to_string(r).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn errors_are_centred_given_the_design() {
    let spec = DgpSpec::sparse(5, 6, 0.0, Tail::Gaussian, Tail::Gaussian, 6);
    let reps = 10_000;
    let mut sum = [0.0; 5];
    let mut sq = [0.0; 5];
    for k in 0..reps {
        let g = generate(&spec, RngStream::new(61, k)).unwrap();
        let fit = g.data.w().mul_vec(&g.coefficients);
        for i in 0..5 {
            let e = g.data.y()[i] - fit[i];
            sum[i] += e;
            sq[i] += e * e;
        }
    }
    let r = reps as f64;
    for i in 0..5 {
        let mean = sum[i] / r;
        let var = sq[i] / r - mean * mean;
        assert!(mean.abs() <= 4.0 * (var / r).sqrt(), "row {i}: mean {mean}");
        assert!((var - 1.0).abs() <= 0.05, "row {i}: var {var}");
    }
}

#[test]
fn dense_mode_layout() {
    let spec = DgpSpec::dense(30, 12, 3.0);
    let g = generate(&spec, RngStream::new(62, 0)).unwrap();
    assert_eq!(g.data.w().cols(), 13);
    assert_eq!(g.data.tested_index(), 0);
    assert_eq!(g.coefficients[0], 0.0);
    let gamma = 3.0 / 12f64.sqrt();
    assert!(g.coefficients[1..].iter().all(|&c| c == gamma));
}

#[test]
fn single_replication_rate_is_binary() {
    let r = run_mc(&DgpSpec::dense(40, 60, 1.0), Method::Corrt, 0.05, 1, 63).unwrap();
    assert!(r.rejection_rate == 0.0 || r.rejection_rate == 1.0);
    assert_eq!(r.records.len(), 1);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let spec = DgpSpec::sparse(40, 70, -0.5, Tail::Gaussian, Tail::StudentT3, 10);
    for method in [Method::Corrt, Method::Debias] {
        let one = in_pool(1, || run_mc(&spec, method, 0.05, 24, 64).unwrap());
        let four = in_pool(4, || run_mc(&spec, method, 0.05, 24, 64).unwrap());
        assert_eq!(json(&one), json(&four));
        assert!(one.records.windows(2).all(|w| w[0].stream_id < w[1].stream_id));
    }
}

#[test]
fn extra_replications_leave_earlier_ones_untouched() {
    let spec = DgpSpec::sparse(50, 80, 0.0, Tail::Gaussian, Tail::Gaussian, 50);
    let short = run_mc(&spec, Method::Debias, 0.05, 100, 65).unwrap();
    let long = run_mc(&spec, Method::Debias, 0.05, 200, 65).unwrap();
    for (a, b) in short.records.iter().zip(&long.records[..100]) {
        assert_eq!(serde_json::to_string(a).unwrap(), serde_json::to_string(b).unwrap());
    }
    let small = DgpSpec::sparse(30, 50, 0.0, Tail::Gaussian, Tail::Gaussian, 3);
    let short = run_mc(&small, Method::Corrt, 0.05, 10, 66).unwrap();
    let long = run_mc(&small, Method::Corrt, 0.05, 20, 66).unwrap();
    for (a, b) in short.records.iter().zip(&long.records[..10]) {
        assert_eq!(serde_json::to_string(a).unwrap(), serde_json::to_string(b).unwrap());
    }
}

#[test]
fn failed_replications_are_recorded_and_excluded() {
    let r = run_mc(&DgpSpec::dense(3, 1, 0.0), Method::Corrt, 0.05, 40, 1).unwrap();
    assert!(r.failures > 0);
    assert_eq!(r.reps + r.failures, 40);
    assert_eq!(r.records.len(), 40);
    assert_eq!(r.records.iter().filter(|x| x.error.is_some()).count(), r.failures);
    assert!((r.rejection_rate - r.rejections as f64 / r.reps as f64).abs() < 1e-15);
    let rate = r.rejection_rate;
    assert!((r.mc_stderr - (rate * (1.0 - rate) / r.reps as f64).sqrt()).abs() < 1e-15);
}

#[test]
fn systematic_failure_is_a_harness_error() {
    let e = run_mc(&DgpSpec::dense(5, 1, 0.0), Method::Corrt, 0.05, 40, 1).unwrap_err();
    assert!(matches!(e, Error::Harness(_)), "{e}");
}

#[test]
fn fully_dense_cell_separates_methods() {
    let spec = DgpSpec::sparse(100, 250, 0.0, Tail::Gaussian, Tail::Gaussian, 250);
    let corrt = run_mc(&spec, Method::Corrt, 0.05, 200, 67).unwrap();
    let debias = run_mc(&spec, Method::Debias, 0.05, 200, 67).unwrap();
    println!("s = p: corrt {} debias {}", corrt.rejection_rate, debias.rejection_rate);
    assert!(corrt.rejection_rate <= 0.12, "corrt {}", corrt.rejection_rate);
    assert!(debias.rejection_rate >= 0.25, "debias {}", debias.rejection_rate);
}

#[test]
fn zero_offset_point_of_power_curve_is_the_size_run() {
    let spec = DgpSpec::sparse(40, 70, 0.0, Tail::Gaussian, Tail::Gaussian, 3);
    for method in [Method::Corrt, Method::Debias] {
        let curve = power_curve(&spec, method, 0.05, 12, &[0.0, 3.0], 68).unwrap();
        let size = run_mc(&spec, method, 0.05, 12, 68).unwrap();
        assert_eq!(json(&curve[0]), json(&size));
        assert_eq!(curve[1].spec.h, 3.0);
    }
}

#[test]
fn power_grows_with_offset() {
    let spec = DgpSpec::sparse(100, 250, 0.0, Tail::Gaussian, Tail::Gaussian, 3);
    let curve = power_curve(&spec, Method::Corrt, 0.05, 200, &[0.0, 6.0], 69).unwrap();
    println!("h = 0: {}  h = 6: {}", curve[0].rejection_rate, curve[1].rejection_rate);
    assert!(curve[1].rejection_rate >= curve[0].rejection_rate);
}

#[test]
#[ignore = "unattainable at desk scale: residual shrinkage from the sup-norm row lowers power well below the limit"]
fn power_near_local_limit() {
    let spec = DgpSpec::sparse(100, 250, 0.0, Tail::Gaussian, Tail::Gaussian, 3).with_h(4.0);
    let kappa = kappa_monte_carlo(250, 0.0, 2, false, 100_000, &mut ChaCha8Rng::seed_from_u64(70));
    let target = corrt_local_power(4.0, kappa, 0.05).unwrap();
    let r = run_mc(&spec, Method::Corrt, 0.05, 200, 70).unwrap();
    assert!((r.rejection_rate - target).abs() <= 0.10, "rate {} target {target}", r.rejection_rate);
}
