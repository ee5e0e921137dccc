//! Beta(1, alpha(x)) stick processes and truncated stick-breaking weights.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{input, Result};
use crate::index_space::{Domain, IndexPoint, LocationSet};
use crate::latent_field::{standard_cdf, CovKernelSpec, GaussianSampler, LatentField};
use crate::rng::StreamSeed;

/// Expected tail mass targeted when no explicit truncation is given.
pub const DEFAULT_TAIL_TARGET: f64 = 1e-6;
/// Upper bound on the stick count chosen from a tail target.
pub const MAX_AUTO_STICKS: usize = 1_000;

/// Concentration parameter, constant or varying over the index space.
#[derive(Clone)]
pub enum Alpha {
    Constant(f64),
    Field {
        func: Arc<dyn Fn(&IndexPoint) -> f64 + Send + Sync>,
        alpha_min: f64,
    },
}

impl fmt::Debug for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Constant(a) => f.debug_tuple("Constant").field(a).finish(),
            Alpha::Field { alpha_min, .. } => f
                .debug_struct("Field")
                .field("alpha_min", alpha_min)
                .finish_non_exhaustive(),
        }
    }
}

impl Alpha {
    pub fn constant(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return input(format!("alpha must be > 0 (alpha_min), got {alpha}"));
        }
        Ok(Alpha::Constant(alpha))
    }

    pub fn field<F>(func: F, alpha_min: f64) -> Result<Self>
    where
        F: Fn(&IndexPoint) -> f64 + Send + Sync + 'static,
    {
        if !(alpha_min.is_finite() && alpha_min > 0.0) {
            return input(format!("alpha_min must be > 0, got {alpha_min}"));
        }
        Ok(Alpha::Field {
            func: Arc::new(func),
            alpha_min,
        })
    }

    /// `alpha(x) = intercept + slope * x_1`, with `alpha_min` taken over the domain.
    pub fn affine(intercept: f64, slope: f64, domain: &Domain) -> Result<Self> {
        let lo = intercept + slope * domain.lo()[0];
        let hi = intercept + slope * domain.hi()[0];
        Self::field(move |x| intercept + slope * x.coords()[0], lo.min(hi))
    }

    pub fn alpha_min(&self) -> f64 {
        match self {
            Alpha::Constant(a) => *a,
            Alpha::Field { alpha_min, .. } => *alpha_min,
        }
    }

    pub fn at(&self, x: &IndexPoint) -> Result<f64> {
        match self {
            Alpha::Constant(a) => Ok(*a),
            Alpha::Field { func, alpha_min } => {
                let a = func(x);
                if !(a.is_finite() && a >= *alpha_min) {
                    return input(format!(
                        "alpha({:?}) = {a} violates alpha_min = {alpha_min}",
                        x.coords()
                    ));
                }
                Ok(a)
            }
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Alpha::Constant(a) => Some(*a),
            Alpha::Field { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Sticks(usize),
    TailMass(f64),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::TailMass(DEFAULT_TAIL_TARGET)
    }
}

impl Truncation {
    /// Resolve to a stick count under the smallest concentration.
    pub fn resolve(&self, alpha_min: f64) -> Result<usize> {
        match *self {
            Truncation::Sticks(0) => input("truncation must use at least one stick"),
            Truncation::Sticks(n) => Ok(n),
            Truncation::TailMass(t) if !(t > 0.0 && t < 1.0) => {
                input(format!("tail mass target must lie in (0, 1), got {t}"))
            }
            Truncation::TailMass(t) => Ok((1..=MAX_AUTO_STICKS)
                .find(|&n| expected_tail(alpha_min, n) < t)
                .unwrap_or(MAX_AUTO_STICKS)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StickSpec {
    pub alpha: Alpha,
    pub kernel: CovKernelSpec,
    pub truncation: Truncation,
}

impl StickSpec {
    pub fn new(alpha: Alpha, kernel: CovKernelSpec, truncation: Truncation) -> Result<Self> {
        truncation.resolve(alpha.alpha_min())?;
        Ok(Self {
            alpha,
            kernel,
            truncation,
        })
    }

    pub fn num_sticks(&self) -> usize {
        self.truncation
            .resolve(self.alpha.alpha_min())
            .expect("validated at construction")
    }
}

/// Beta(1, alpha) quantile `1 - (1 - t)^(1/alpha)`.
pub fn beta_quantile(t: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return input(format!("quantile level {t} outside [0, 1]"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return input(format!("alpha must be > 0, got {alpha}"));
    }
    Ok(beta_quantile_unchecked(t, alpha))
}

#[inline]
pub(crate) fn beta_quantile_unchecked(t: f64, alpha: f64) -> f64 {
    (-((-t).ln_1p() / alpha).exp_m1()).clamp(0.0, 1.0)
}

/// Beta(1, alpha) c.d.f. `1 - (1 - v)^alpha`.
pub fn beta_cdf(v: f64, alpha: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else if v >= 1.0 {
        1.0
    } else {
        -(alpha * (-v).ln_1p()).exp_m1()
    }
}

/// Pushes a latent Gaussian field through `F_B^{-1}(F_Z(z))`.
pub fn gauss_to_stick(field: &LatentField, spec: &StickSpec) -> Result<Vec<f64>> {
    field
        .values
        .iter()
        .zip(field.locations.points())
        .map(|(&z, x)| {
            let u = standard_cdf(spec.kernel.standardize(z));
            beta_quantile(u, spec.alpha.at(x)?)
        })
        .collect()
}

/// Stick-breaking weights for each column with the leftover mass kept in `tail`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedWeights {
    pub weights: DMatrix<f64>,
    pub tail: Vec<f64>,
}

impl TruncatedWeights {
    pub fn num_sticks(&self) -> usize {
        self.weights.nrows()
    }

    pub fn num_locations(&self) -> usize {
        self.weights.ncols()
    }

    /// True when every column has identical weights.
    pub fn is_location_invariant(&self) -> bool {
        (1..self.num_locations()).all(|j| self.weights.column(j) == self.weights.column(0))
    }
}

pub fn stick_weights(v: &DMatrix<f64>) -> Result<TruncatedWeights> {
    if let Some(bad) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return input(format!("stick variable {bad} outside [0, 1]"));
    }
    let (n, l) = v.shape();
    let mut weights = DMatrix::zeros(n, l);
    let mut tail = Vec::with_capacity(l);
    for j in 0..l {
        let mut rest = 1.0;
        for i in 0..n {
            let w = v[(i, j)] * rest;
            weights[(i, j)] = w;
            rest -= w;
        }
        tail.push(rest.max(0.0));
    }
    Ok(TruncatedWeights { weights, tail })
}

/// `E[prod_{j<=n} (1 - V_j)] = (alpha / (1 + alpha))^n` for iid Beta(1, alpha) sticks.
pub fn expected_tail(alpha: f64, n: usize) -> f64 {
    (alpha / (1.0 + alpha)).powi(n as i32)
}

/// Draws the `N x |locs|` stick matrix for location-dependent sticks.
///
/// Stick `i` uses its own latent field drawn from `seed.child(i)`.
#[derive(Debug, Clone)]
pub struct StickSampler {
    field: GaussianSampler,
    kernel: CovKernelSpec,
    alphas: Vec<f64>,
    sticks: usize,
}

impl StickSampler {
    pub fn new(spec: &StickSpec, locs: &LocationSet) -> Result<Self> {
        let alphas = locs
            .points()
            .iter()
            .map(|x| spec.alpha.at(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            field: GaussianSampler::new(&spec.kernel, locs)?,
            kernel: spec.kernel,
            alphas,
            sticks: spec.num_sticks(),
        })
    }

    pub fn num_sticks(&self) -> usize {
        self.sticks
    }

    pub fn sample(&self, seed: &StreamSeed) -> DMatrix<f64> {
        let l = self.alphas.len();
        let mut v = DMatrix::zeros(self.sticks, l);
        for i in 0..self.sticks {
            let z = self.field.draw(&mut seed.child(i as u64).rng());
            for j in 0..l {
                let u = standard_cdf(self.kernel.standardize(z[j]));
                v[(i, j)] = beta_quantile_unchecked(u, self.alphas[j]);
            }
        }
        v
    }
}

/// Location-invariant iid Beta(1, alpha) sticks, replicated across `locations` columns.
pub fn sample_iid_sticks(alpha: f64, sticks: usize, locations: usize, seed: &StreamSeed) -> DMatrix<f64> {
    let mut rng = seed.rng();
    let mut v = DMatrix::zeros(sticks, locations);
    for i in 0..sticks {
        let s = beta_quantile_unchecked(rng.random::<f64>(), alpha);
        v.row_mut(i).fill(s);
    }
    v
}
