//! Gaussian base fields on finite location sets.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{input, DsbError, Result};
use crate::index_space::{sq_dist, LocationSet};
use crate::rng::StreamSeed;

/// Relative diagonal jitter tried first.
pub const BASE_JITTER: f64 = 1e-10;
/// Number of tenfold jitter escalations before giving up.
pub const MAX_JITTER_ESCALATIONS: usize = 4;

/// Squared-exponential covariance `sigma0 * exp(-d^2 / tau^2)` with constant mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovKernelSpec {
    sigma0: f64,
    tau: f64,
    mean: f64,
}

impl CovKernelSpec {
    pub fn new(sigma0: f64, tau: f64, mean: f64) -> Result<Self> {
        if !(sigma0.is_finite() && sigma0 > 0.0) {
            return input(format!("kernel sigma0 must be positive and finite, got {sigma0}"));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return input(format!("kernel tau must be positive and finite, got {tau}"));
        }
        if !mean.is_finite() {
            return input(format!("kernel mean must be finite, got {mean}"));
        }
        Ok(Self { sigma0, tau, mean })
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Marginal standard deviation `sqrt(sigma0)`.
    pub fn marginal_sd(&self) -> f64 {
        self.sigma0.sqrt()
    }

    pub fn covariance(&self, sq_distance: f64) -> f64 {
        self.sigma0 * (-sq_distance / (self.tau * self.tau)).exp()
    }

    /// Maps a field value to `(z - mean) / sqrt(sigma0)`.
    pub fn standardize(&self, z: f64) -> f64 {
        (z - self.mean) / self.marginal_sd()
    }
}

pub fn cov_matrix(kernel: &CovKernelSpec, locs: &LocationSet) -> DMatrix<f64> {
    let n = locs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = kernel.sigma0;
        for j in 0..i {
            let c = kernel.covariance(sq_dist(locs.get(i).coords(), locs.get(j).coords()));
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    m
}

/// Standard normal c.d.f. via `Phi(z) = erfc(-z / sqrt 2) / 2`.
pub fn standard_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Cholesky-factored sampler for `N(mean * 1, Sigma + jitter * I)`.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: f64,
    lower: DMatrix<f64>,
    jitter: f64,
}

impl GaussianSampler {
    pub fn new(kernel: &CovKernelSpec, locs: &LocationSet) -> Result<Self> {
        let cov = cov_matrix(kernel, locs);
        let mut jitter = BASE_JITTER * kernel.sigma0;
        for attempt in 0..=MAX_JITTER_ESCALATIONS {
            let mut m = cov.clone();
            for i in 0..m.nrows() {
                m[(i, i)] += jitter;
            }
            if let Some(ch) = Cholesky::<f64, Dyn>::new(m) {
                return Ok(Self {
                    mean: kernel.mean,
                    lower: ch.unpack(),
                    jitter,
                });
            }
            if attempt < MAX_JITTER_ESCALATIONS {
                jitter *= 10.0;
            }
        }
        let diag = cov.diagonal();
        Err(DsbError::Factorization {
            attempts: MAX_JITTER_ESCALATIONS,
            final_jitter: jitter,
            min_diag: diag.min(),
            max_diag: diag.max(),
        })
    }

    pub fn len(&self) -> usize {
        self.lower.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Diagonal jitter that made the covariance factorizable.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.len();
        let eps: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        (0..n)
            .map(|i| {
                let row = self.lower.row(i);
                let mut acc = self.mean;
                for (j, e) in eps.iter().enumerate().take(i + 1) {
                    acc += row[j] * e;
                }
                acc
            })
            .collect()
    }
}

/// One realization of the Gaussian base process on a location set.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentField {
    pub locations: LocationSet,
    pub values: Vec<f64>,
    pub seed_tag: StreamSeed,
}

pub fn sample_field(
    kernel: &CovKernelSpec,
    locs: &LocationSet,
    seed: &StreamSeed,
) -> Result<LatentField> {
    let sampler = GaussianSampler::new(kernel, locs)?;
    let values = sampler.draw(&mut seed.rng());
    Ok(LatentField {
        locations: locs.clone(),
        values,
        seed_tag: *seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_space::{build_grid, Domain, IndexPoint};
    use approx::assert_abs_diff_eq;

    fn line(xs: &[f64]) -> LocationSet {
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
        LocationSet::new(
            xs.iter().map(|&x| IndexPoint::scalar(x).unwrap()).collect(),
            Domain::cube(lo, hi, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn cov_examples() {
        let k = CovKernelSpec::new(1.0, 1.0, 0.0).unwrap();
        let m = cov_matrix(&k, &line(&[0.0, 1.0, 100.0]));
        assert_eq!(m[(0, 0)], 1.0);
        assert_abs_diff_eq!(m[(0, 1)], (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 1)], 0.367879, epsilon = 1e-6);
        assert!(m[(0, 2)] < 1e-300);
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn invalid_kernels_rejected() {
        assert!(CovKernelSpec::new(0.0, 1.0, 0.0).is_err());
        assert!(CovKernelSpec::new(1.0, -1.0, 0.0).is_err());
        assert!(CovKernelSpec::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(standard_cdf(0.0), 0.5);
        assert!(standard_cdf(-40.0) < 1e-300);
        assert_abs_diff_eq!(standard_cdf(1.959964), 0.975, epsilon = 1e-6);
    }

    #[test]
    fn cdf_matches_quadrature() {
        // Simpson's rule on the normal density from -12 to z.
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        for &z in &[-3.0, -1.0, 0.3, 1.959964, 4.0] {
            let n = 20_000;
            let (a, h) = (-12.0, (z + 12.0) / n as f64);
            let mut s = pdf(a) + pdf(z);
            for i in 1..n {
                s += pdf(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            assert_abs_diff_eq!(standard_cdf(z), s * h / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cdf_monotone_on_ladder() {
        let mut prev = 0.0;
        for i in 0..10_000 {
            let z = -40.0 + 80.0 * i as f64 / 9_999.0;
            let c = standard_cdf(z);
            assert!(c >= prev);
            assert!((0.0..=1.0).contains(&c));
            prev = c;
        }
    }

    #[test]
    fn degenerate_kernel_collapses_to_mean() {
        let k = CovKernelSpec::new(1e-30, 1.0, 2.5).unwrap();
        let f = sample_field(&k, &line(&[0.0, 0.3, 0.9]), &StreamSeed::new(1)).unwrap();
        for v in f.values {
            assert_abs_diff_eq!(v, 2.5, epsilon = 1e-10);
        }
    }

    #[test]
    fn single_location_mean_oracle() {
        let k = CovKernelSpec::new(1.0, 1.0, 0.0).unwrap();
        let locs = line(&[0.0]);
        let s = GaussianSampler::new(&k, &locs).unwrap();
        let mut rng = StreamSeed::new(11).rng();
        let n = 10_000;
        let mean: f64 = (0..n).map(|_| s.draw(&mut rng)[0]).sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn sampling_is_deterministic() {
        let k = CovKernelSpec::new(1.0, 0.5, 0.0).unwrap();
        let locs = line(&[0.0, 0.25, 0.5]);
        let a = sample_field(&k, &locs, &StreamSeed::new(5)).unwrap();
        let b = sample_field(&k, &locs, &StreamSeed::new(5)).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn grids_factorize_with_jitter() {
        let k = CovKernelSpec::new(1.0, 1.0, 0.0).unwrap();
        for res in [2, 5, 20, 50] {
            let g = build_grid(&Domain::cube(0.0, 1.0, 1).unwrap(), &[res]).unwrap();
            assert!(GaussianSampler::new(&k, &g).is_ok(), "res {res}");
        }
        let g = build_grid(&Domain::cube(0.0, 1.0, 2).unwrap(), &[7, 7]).unwrap();
        assert!(GaussianSampler::new(&k, &g).is_ok());
    }

    #[test]
    fn empirical_covariance_matches_kernel() {
        let k = CovKernelSpec::new(1.3, 0.7, 0.4).unwrap();
        let locs = build_grid(&Domain::cube(0.0, 1.5, 1).unwrap(), &[6]).unwrap();
        let target = cov_matrix(&k, &locs);
        let s = GaussianSampler::new(&k, &locs).unwrap();
        let mut rng = StreamSeed::new(2024).rng();
        let n = 20_000;
        let draws: Vec<Vec<f64>> = (0..n).map(|_| s.draw(&mut rng)).collect();
        let l = locs.len();
        for i in 0..l {
            for j in 0..l {
                // Mean is known, so products of centred values are unbiased.
                let prods: Vec<f64> = draws.iter().map(|d| (d[i] - 0.4) * (d[j] - 0.4)).collect();
                let m = prods.iter().sum::<f64>() / n as f64;
                let var = prods.iter().map(|p| (p - m) * (p - m)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                assert!((m - target[(i, j)]).abs() < 5.0 * se, "({i},{j}) {m} vs {}", target[(i, j)]);
            }
        }
    }
}
