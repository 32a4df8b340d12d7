use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix};

/// Identifies one reproducible random stream: a master seed plus a stream
/// number (one per Monte Carlo replication).
///
/// Backed by ChaCha8, whose 64-bit stream selector gives independent,
/// counter-addressed streams for the same key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A fresh generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Tail behaviour of generated entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Gaussian,
    StudentT3,
}

impl Tail {
    /// Variance of one raw entry.
    pub fn variance(self) -> f64 {
        match self {
            Tail::Gaussian => 1.0,
            Tail::StudentT3 => 3.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Tail::Gaussian => rng.sample(StandardNormal),
            Tail::StudentT3 => sample_t3(rng),
        }
    }
}

/// Student t with 3 degrees of freedom as N(0,1) / √(χ²₃ / 3).
fn sample_t3<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let chi2: f64 = (0..3)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            g * g
        })
        .sum();
    z / (chi2 / 3.0).sqrt()
}

/// Toeplitz covariance Σ with entries ρ^|i−j|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzSpec {
    pub dim: usize,
    pub rho: f64,
}

impl ToeplitzSpec {
    pub fn new(dim: usize, rho: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter(
                "Toeplitz dimension must be positive".into(),
            ));
        }
        if !(rho.abs() < 1.0) {
            return Err(Error::Parameter(format!(
                "Toeplitz covariance needs |rho| < 1 to be positive definite, got {rho}"
            )));
        }
        Ok(Self { dim, rho })
    }

    pub fn covariance(&self) -> Matrix {
        Matrix::from_fn(self.dim, self.dim, |i, j| {
            self.rho.powi(i.abs_diff(j) as i32)
        })
    }

    /// Closed-form inverse of the AR(1)-type covariance (tridiagonal).
    pub fn precision(&self) -> Matrix {
        let p = self.dim;
        let r = self.rho;
        let s = 1.0 - r * r;
        let mut m = Matrix::zeros(p, p);
        for i in 0..p {
            let edge = i == 0 || i == p - 1;
            m[(i, i)] = if p == 1 {
                1.0
            } else if edge {
                1.0 / s
            } else {
                (1.0 + r * r) / s
            };
            if i + 1 < p {
                m[(i, i + 1)] = -r / s;
                m[(i + 1, i)] = -r / s;
            }
        }
        m
    }

    pub fn factor(&self) -> Result<ToeplitzFactor> {
        ToeplitzFactor::new(*self)
    }
}

/// Cached lower Cholesky factor of a Toeplitz covariance.
#[derive(Debug, Clone)]
pub struct ToeplitzFactor {
    spec: ToeplitzSpec,
    // None when ρ = 0 (identity).
    lower: Option<Matrix>,
}

impl ToeplitzFactor {
    pub fn new(spec: ToeplitzSpec) -> Result<Self> {
        let spec = ToeplitzSpec::new(spec.dim, spec.rho)?;
        let lower = if spec.rho == 0.0 {
            None
        } else {
            Some(cholesky(&spec.covariance())?)
        };
        Ok(Self { spec, lower })
    }

    pub fn spec(&self) -> ToeplitzSpec {
        self.spec
    }

    /// Draw `n` i.i.d. rows L·U with U having i.i.d. entries of the given tail.
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, tail: Tail, rng: &mut R) -> Matrix {
        let p = self.spec.dim;
        let mut out = Matrix::zeros(n, p);
        let mut u = vec![0.0; p];
        for i in 0..n {
            for ui in u.iter_mut() {
                *ui = tail.sample(rng);
            }
            let row = out.row_mut(i);
            match &self.lower {
                None => row.copy_from_slice(&u),
                Some(l) => {
                    for (a, ra) in row.iter_mut().enumerate() {
                        *ra = crate::linalg::dot(&l.row(a)[..=a], &u[..=a]);
                    }
                }
            }
        }
        out
    }
}

/// Draw an n×p design with i.i.d. rows Σ(ρ)^{1/2}·U.
///
/// Student-t entries are the raw t₃ variates (variance 3), not standardized.
pub fn draw_design(n: usize, spec: ToeplitzSpec, tail: Tail, stream: RngStream) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::Parameter("design needs at least one row".into()));
    }
    let factor = ToeplitzFactor::new(spec)?;
    Ok(factor.draw(n, tail, &mut stream.rng()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut r = RngStream::new(7, 3).rng();
            (0..8).map(|_| r.random()).collect()
        };
        let b: Vec<u64> = {
            let mut r = RngStream::new(7, 3).rng();
            (0..8).map(|_| r.random()).collect()
        };
        let c: Vec<u64> = {
            let mut r = RngStream::new(7, 4).rng();
            (0..8).map(|_| r.random()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn design_is_bitwise_reproducible() {
        let spec = ToeplitzSpec::new(6, -0.5).unwrap();
        let s = RngStream::new(11, 2);
        let a = draw_design(20, spec, Tail::StudentT3, s).unwrap();
        let b = draw_design(20, spec, Tail::StudentT3, s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identity_covariance_row_is_raw_normals() {
        let spec = ToeplitzSpec::new(4, 0.0).unwrap();
        let s = RngStream::new(5, 0);
        let x = draw_design(1, spec, Tail::Gaussian, s).unwrap();
        let mut r = s.rng();
        for j in 0..4 {
            let g: f64 = r.sample(StandardNormal);
            assert_eq!(x[(0, j)], g);
        }
    }

    #[test]
    fn non_pd_rho_is_rejected() {
        assert!(ToeplitzSpec::new(3, 1.0).is_err());
        assert!(ToeplitzSpec::new(3, -1.2).is_err());
        let bad = ToeplitzSpec { dim: 3, rho: 1.0 };
        assert!(draw_design(2, bad, Tail::Gaussian, RngStream::new(1, 1)).is_err());
    }

    #[test]
    fn precision_inverts_covariance() {
        for rho in [0.0, -0.5, 0.3] {
            let t = ToeplitzSpec::new(5, rho).unwrap();
            let prod = t.covariance().matmul(&t.precision());
            for i in 0..5 {
                for j in 0..5 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[(i, j)] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gaussian_covariance_matches_toeplitz() {
        let spec = ToeplitzSpec::new(5, -0.5).unwrap();
        let n = 50_000;
        let x = draw_design(n, spec, Tail::Gaussian, RngStream::new(3, 0)).unwrap();
        let emp = x.gram(n as f64);
        let sigma = spec.covariance();
        for i in 0..5 {
            for j in 0..5 {
                assert!((emp[(i, j)] - sigma[(i, j)]).abs() < 0.02, "({i},{j})");
            }
        }
    }

    #[test]
    fn t3_tail_probability() {
        // P(|t₃| > 3.182) = 0.05 (two-sided 95% point of t₃ is 3.18245).
        let mut r = RngStream::new(17, 0).rng();
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| Tail::StudentT3.sample(&mut r).abs() > 3.182)
            .count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.05).abs() < 0.005, "{rate}");
    }

    #[test]
    fn entry_variance_within_five_percent() {
        for tail in [Tail::Gaussian, Tail::StudentT3] {
            let mut r = RngStream::new(23, 1).rng();
            let n = 100_000;
            let v: f64 = (0..n).map(|_| tail.sample(&mut r).powi(2)).sum::<f64>() / n as f64;
            assert!((v / tail.variance() - 1.0).abs() < 0.05, "{tail:?}: {v}");
        }
    }
}
