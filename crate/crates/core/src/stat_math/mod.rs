//! Scalar statistical functions and random generation primitives.
//!
//! The normal CDF is evaluated through the complementary error function,
//! which keeps full relative accuracy in both tails. The quantile starts
//! from a rational approximation and takes one Halley step on the CDF.

mod random;

pub use random::{draw_design, RngStream, Tail, ToeplitzFactor, ToeplitzSpec};

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::erfc;

use crate::error::{Error, Result};

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF, Φ(x).
pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("normal_cdf of non-finite value {x}")));
    }
    Ok(phi(x))
}

#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal quantile, Φ⁻¹(u) for u in (0, 1).
pub fn normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "normal_quantile requires 0 < u < 1, got {u}"
        )));
    }
    // 1 - u is exact for u >= 0.5, so the lower tail carries all the work.
    Ok(if u <= 0.5 {
        lower_quantile(u)
    } else {
        -lower_quantile(1.0 - u)
    })
}

/// Φ⁻¹(1 − tail) without forming 1 − tail, so tiny tails keep their precision.
pub fn normal_upper_quantile(tail: f64) -> Result<f64> {
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::Domain(format!(
            "upper quantile requires 0 < tail < 1, got {tail}"
        )));
    }
    Ok(if tail <= 0.5 {
        -lower_quantile(tail)
    } else {
        lower_quantile(1.0 - tail)
    })
}

// Acklam's rational approximation (relative error ~1.2e-9).
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

/// Quantile for u in (0, 0.5].
fn lower_quantile(u: f64) -> f64 {
    let x0 = if u < P_LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    // Halley refinement on the lower-tail CDF.
    let e = phi(x0) - u;
    let t = e / normal_pdf(x0);
    x0 - t / (1.0 + 0.5 * x0 * t)
}

/// Two-sided critical value Φ⁻¹(1 − α/2).
pub fn two_sided_critical(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    normal_upper_quantile(alpha / 2.0)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Limiting Type I error of the debiased-Lasso Wald test when the nuisance
/// vector is a·p^{-1/2}·1:  2 − 2Φ(Φ⁻¹(1 − α/2)/√(1 + a²)).
pub fn wald_size_distortion(alpha: f64, a: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !a.is_finite() {
        return Err(Error::Domain(format!("a must be finite, got {a}")));
    }
    if a == 0.0 {
        return Ok(alpha);
    }
    let z = normal_upper_quantile(alpha / 2.0)?;
    // 2 − 2Φ(t) = 2Φ(−t), evaluated in the tail.
    Ok(2.0 * phi(-z / (1.0 + a * a).sqrt()))
}

/// Asymptotic local power Ψ(h, κ, α) = Φ(−z + hκ) + Φ(−z − hκ), z = Φ⁻¹(1 − α/2).
pub fn corrt_local_power(h: f64, kappa: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !h.is_finite() || !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::Domain(format!(
            "need finite h and kappa > 0, got h={h}, kappa={kappa}"
        )));
    }
    let z = normal_upper_quantile(alpha / 2.0)?;
    let shift = (h * kappa).abs();
    Ok(phi(-z + shift) + phi(-z - shift))
}
