//! Small statistical helpers: Monte Carlo summaries, the one-sample
//! Kolmogorov-Smirnov test, Clopper-Pearson intervals and a jackknifed
//! Pearson correlation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{input, DsbError, Result};

/// Sample mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Summary {
    /// Summaries are accumulated in slice order so results are reproducible.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n }
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // theta-function form converges fast for small arguments
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let s: f64 = (1..=20)
            .map(|k| {
                let m = (2 * k - 1) as f64;
                (-m * m * c).exp()
            })
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let kf = k as f64;
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * kf * kf * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample KS test against a continuous c.d.f. with the asymptotic p-value.
pub fn ks_test<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<KsResult> {
    if sample.is_empty() {
        return input("KS test needs a nonempty sample");
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(n.sqrt() * d),
        n: xs.len(),
    })
}

/// Exact (Clopper-Pearson) two-sided binomial interval at confidence `1 - level`.
pub fn clopper_pearson(hits: usize, n: usize, level: f64) -> Result<(f64, f64)> {
    if n == 0 || hits > n {
        return input(format!("invalid binomial counts {hits}/{n}"));
    }
    let beta_q = |a: f64, b: f64, p: f64| -> Result<f64> {
        Beta::new(a, b)
            .map(|d| d.inverse_cdf(p))
            .map_err(|e| DsbError::Input(e.to_string()))
    };
    let (k, nf) = (hits as f64, n as f64);
    let lo = if hits == 0 { 0.0 } else { beta_q(k, nf - k + 1.0, level / 2.0)? };
    let hi = if hits == n { 1.0 } else { beta_q(k + 1.0, nf - k, 1.0 - level / 2.0)? };
    Ok((lo, hi))
}

/// Pearson correlation with a delete-one jackknife standard error.
pub fn pearson_jackknife(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return input("correlation needs two equally long samples of size >= 3");
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return input("degenerate variance in correlation");
    }
    let rho = sxy / (sxx * syy).sqrt();

    // leave-one-out via centred running sums
    let loo: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let (dx, dy) = (a - mx, b - my);
            let k = nf / (nf - 1.0);
            let cxx = sxx - k * dx * dx;
            let cyy = syy - k * dy * dy;
            let cxy = sxy - k * dx * dy;
            if cxx > 0.0 && cyy > 0.0 {
                cxy / (cxx * cyy).sqrt()
            } else {
                rho
            }
        })
        .collect();
    let mean = loo.iter().sum::<f64>() / nf;
    let se = ((nf - 1.0) / nf * loo.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()).sqrt();
    Ok((rho, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeed;
    use rand::Rng;

    #[test]
    fn kolmogorov_branches_agree() {
        // both series are valid near lambda = 1
        for &l in &[0.9, 0.95, 1.0, 1.05] {
            let theta = {
                let c = std::f64::consts::PI.powi(2) / (8.0 * l * l);
                1.0 - (2.0 * std::f64::consts::PI).sqrt() / l
                    * (1..=20).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum::<f64>()
            };
            let alt = 2.0 * (1..=100).map(|k| {
                let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                s * (-2.0 * (k * k) as f64 * l * l).exp()
            }).sum::<f64>();
            assert!((theta - alt).abs() < 1e-12);
        }
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_uniform_null_and_power() {
        let mut rng = StreamSeed::new(1).rng();
        let xs: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        assert!(ks_test(&xs, |x| x.clamp(0.0, 1.0)).unwrap().p_value > 0.01);
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(ks_test(&sq, |x| x.clamp(0.0, 1.0)).unwrap().p_value < 1e-6);
    }

    #[test]
    fn clopper_pearson_bounds() {
        let (lo, hi) = clopper_pearson(0, 100, 0.05).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.0362).abs() < 1e-3);
        let (lo, hi) = clopper_pearson(100, 100, 0.05).unwrap();
        assert_eq!(hi, 1.0);
        assert!((lo - 0.9638).abs() < 1e-3);
        let (lo, hi) = clopper_pearson(1, 10_000, 0.05).unwrap();
        assert!(lo > 0.0 && hi < 1e-3);
    }

    #[test]
    fn correlation_identity_and_independence() {
        let mut rng = StreamSeed::new(2).rng();
        let x: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let (r, _) = pearson_jackknife(&x, &x).unwrap();
        assert_eq!(r, 1.0);
        let y: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let (r, se) = pearson_jackknife(&x, &y).unwrap();
        assert!(r.abs() < 3.0 * se, "{r} {se}");
        assert!((se - 1.0 / 2000f64.sqrt()).abs() < 0.01);
        assert!(pearson_jackknife(&[1.0; 10], &x[..10]).is_err());
    }

    #[test]
    fn summary_basics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
