//! Induced mixture densities `rho(y, gamma, x) = sum_i w_i(x) psi(y, gamma, theta_i(x))`
//! on trapezoid grids, distances between densities, and the kernel decay check.

use serde::{Deserialize, Serialize};

use crate::ddp::{DiscreteMeasure, MeasureField};
use crate::error::{input, DsbError, Result};
use crate::table::{fmt_f64, Table};

/// Cap on the Beta-family shape parameter used as gamma.
pub const BETA_GAMMA_MAX: f64 = 50.0;
/// Minimum captured mass before a grid is declared to miss the support.
pub const COVERAGE_MIN: f64 = 0.999;
pub const NORMALIZATION_TOL: f64 = 1e-6;
pub const DEFAULT_NODES: usize = 2001;

/// Uniform trapezoid quadrature on an interval of the response space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl DensityGrid {
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || n < 2 {
            return input(format!("density grid needs lo < hi and >= 2 nodes, got [{lo}, {hi}] x {n}"));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
            .collect();
        let mut weights = vec![h; n];
        weights[0] = h / 2.0;
        weights[n - 1] = h / 2.0;
        Ok(Self { nodes, weights })
    }

    /// Same interval with the spacing halved.
    pub fn refined(&self) -> Self {
        let n = self.nodes.len();
        Self::uniform(self.nodes[0], self.nodes[n - 1], 2 * n - 1).expect("valid parent grid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn tabulate<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(|&y| f(y)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MixtureKernel {
    /// Normal location kernel: theta is the mean, gamma the standard deviation.
    GaussianLoc { gamma_min: f64, gamma_max: f64 },
    /// Beta(gamma, theta) on [0, 1] with theta in [1, beta_max] and gamma in [1, 50].
    BetaConstrained { beta_max: f64 },
    /// Beta(theta_1, theta_2) with both shapes free in [1, inf). Fails the decay condition.
    BetaFree,
}

fn xlogy(c: f64, y: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * y.ln()
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

fn beta_density(y: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&y) {
        return 0.0;
    }
    (xlogy(a - 1.0, y) + xlogy(b - 1.0, 1.0 - y) - ln_beta(a, b)).exp()
}

impl MixtureKernel {
    pub fn gaussian_loc(gamma_min: f64, gamma_max: f64) -> Result<Self> {
        if !(gamma_min > 0.0 && gamma_min <= gamma_max && gamma_max.is_finite()) {
            return input(format!("gaussian_loc needs 0 < gamma_min <= gamma_max, got [{gamma_min}, {gamma_max}]"));
        }
        let k = MixtureKernel::GaussianLoc { gamma_min, gamma_max };
        k.validate_normalization()?;
        Ok(k)
    }

    pub fn beta_constrained(beta_max: f64) -> Result<Self> {
        if !(beta_max.is_finite() && beta_max >= 1.0) {
            return input(format!("beta_constrained needs beta_max >= 1, got {beta_max}"));
        }
        let k = MixtureKernel::BetaConstrained { beta_max };
        k.validate_normalization()?;
        Ok(k)
    }

    pub fn beta_free() -> Result<Self> {
        let k = MixtureKernel::BetaFree;
        k.validate_normalization()?;
        Ok(k)
    }

    pub fn name(&self) -> &'static str {
        match self {
            MixtureKernel::GaussianLoc { .. } => "gaussian_loc",
            MixtureKernel::BetaConstrained { .. } => "beta_constrained",
            MixtureKernel::BetaFree => "beta_free",
        }
    }

    pub fn theta_dim(&self) -> usize {
        match self {
            MixtureKernel::BetaFree => 2,
            _ => 1,
        }
    }

    /// Bounds on gamma; `None` when the family has no gamma.
    pub fn gamma_bounds(&self) -> Option<(f64, f64)> {
        match *self {
            MixtureKernel::GaussianLoc { gamma_min, gamma_max } => Some((gamma_min, gamma_max)),
            MixtureKernel::BetaConstrained { .. } => Some((1.0, BETA_GAMMA_MAX)),
            MixtureKernel::BetaFree => None,
        }
    }

    pub fn check_gamma(&self, gamma: f64) -> Result<()> {
        match self.gamma_bounds() {
            Some((lo, hi)) if !(lo <= gamma && gamma <= hi) => {
                input(format!("gamma {gamma} outside [{lo}, {hi}] for {}", self.name()))
            }
            _ => Ok(()),
        }
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta_dim() {
            return Err(DsbError::Dimension {
                expected: self.theta_dim(),
                got: theta.len(),
            });
        }
        let ok = match *self {
            MixtureKernel::GaussianLoc { .. } => theta[0].is_finite(),
            MixtureKernel::BetaConstrained { beta_max } => (1.0..=beta_max).contains(&theta[0]),
            MixtureKernel::BetaFree => theta.iter().all(|t| t.is_finite() && *t >= 1.0),
        };
        if ok {
            Ok(())
        } else {
            input(format!("atom {theta:?} lies outside Theta for {}", self.name()))
        }
    }

    /// Families usable for assembling and mixing sampled paths.
    pub fn ensure_pipeline_ok(&self) -> Result<()> {
        match self {
            MixtureKernel::BetaFree => input("beta_free violates the decay condition and is only available for decay checks"),
            _ => Ok(()),
        }
    }

    pub fn psi(&self, y: f64, gamma: f64, theta: &[f64]) -> f64 {
        match *self {
            MixtureKernel::GaussianLoc { .. } => {
                let z = (y - theta[0]) / gamma;
                (-0.5 * z * z).exp() / (gamma * (2.0 * std::f64::consts::PI).sqrt())
            }
            MixtureKernel::BetaConstrained { .. } => beta_density(y, gamma, theta[0]),
            MixtureKernel::BetaFree => beta_density(y, theta[0], theta[1]),
        }
    }

    fn validate_normalization(&self) -> Result<()> {
        let cases: Vec<(f64, Vec<f64>, DensityGrid)> = match *self {
            MixtureKernel::GaussianLoc { gamma_min, gamma_max } => [gamma_min, gamma_max]
                .iter()
                .map(|&g| Ok((g, vec![0.0], DensityGrid::uniform(-12.0 * g, 12.0 * g, 4001)?)))
                .collect::<Result<_>>()?,
            MixtureKernel::BetaConstrained { beta_max } => {
                let grid = DensityGrid::uniform(0.0, 1.0, 20_001)?;
                [1.0, BETA_GAMMA_MAX]
                    .iter()
                    .flat_map(|&a| [1.0, beta_max].map(|b| (a, vec![b], grid.clone())))
                    .collect()
            }
            MixtureKernel::BetaFree => {
                let grid = DensityGrid::uniform(0.0, 1.0, 20_001)?;
                vec![(0.0, vec![1.0, 1.0], grid.clone()), (0.0, vec![3.0, 20.0], grid)]
            }
        };
        for (gamma, theta, mut grid) in cases {
            let mut err = f64::INFINITY;
            for _ in 0..5 {
                err = (grid.integrate(&grid.tabulate(|y| self.psi(y, gamma, &theta))) - 1.0).abs();
                if err < NORMALIZATION_TOL {
                    break;
                }
                grid = grid.refined();
            }
            if err >= NORMALIZATION_TOL {
                return input(format!(
                    "{} kernel at gamma={gamma}, theta={theta:?} integrates to 1 only within {err:e}",
                    self.name()
                ));
            }
        }
        Ok(())
    }
}

/// Mixture density of `m` under `kernel` at scale `gamma`, tabulated on `grid`.
pub fn mixture_density(m: &DiscreteMeasure, kernel: &MixtureKernel, gamma: f64, grid: &DensityGrid) -> Result<Vec<f64>> {
    kernel.check_gamma(gamma)?;
    for (a, _) in m.iter() {
        kernel.check_theta(a)?;
    }
    let mut values = vec![0.0; grid.len()];
    for (a, w) in m.iter() {
        if w == 0.0 {
            continue;
        }
        for (v, &y) in values.iter_mut().zip(grid.nodes()) {
            *v += w * kernel.psi(y, gamma, a);
        }
    }
    let mass = grid.integrate(&values);
    if mass < COVERAGE_MIN {
        return Err(DsbError::Coverage { mass });
    }
    Ok(values)
}

/// Hellinger distance `sqrt(max(0, 1 - int sqrt(p q)))`.
pub fn hellinger(grid: &DensityGrid, p: &[f64], q: &[f64]) -> f64 {
    let bc: f64 = grid
        .weights()
        .iter()
        .zip(p.iter().zip(q))
        .map(|(w, (a, b))| w * (a * b).sqrt())
        .sum();
    (1.0 - bc).max(0.0).sqrt()
}

pub fn sup_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// L1 distance `int |p - q|` (twice the total variation between the densities' laws).
pub fn l1_distance(grid: &DensityGrid, p: &[f64], q: &[f64]) -> f64 {
    grid.weights()
        .iter()
        .zip(p.iter().zip(q))
        .map(|(w, (a, b))| w * (a - b).abs())
        .sum()
}

/// `KL(p || q) = int p log(p / q)` with `0 log 0 = 0`.
pub fn kl_divergence(grid: &DensityGrid, p: &[f64], q: &[f64]) -> Result<f64> {
    let mut kl = 0.0;
    for (i, (w, (a, b))) in grid.weights().iter().zip(p.iter().zip(q)).enumerate() {
        if *a <= 0.0 {
            continue;
        }
        if *b <= 0.0 {
            return Err(DsbError::Support { node: i, value: *a });
        }
        kl += w * a * (a / b).ln();
    }
    Ok(kl)
}

/// Hellinger distance between two densities given as closures, refining the
/// grid by halving until successive values differ by < 1e-6 (at most 3 times).
pub fn hellinger_refined<P, Q>(p: P, q: Q, lo: f64, hi: f64) -> Result<f64>
where
    P: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
{
    let mut grid = DensityGrid::uniform(lo, hi, DEFAULT_NODES)?;
    let mut prev = hellinger(&grid, &grid.tabulate(&p), &grid.tabulate(&q));
    for _ in 0..3 {
        grid = grid.refined();
        let next = hellinger(&grid, &grid.tabulate(&p), &grid.tabulate(&q));
        if (next - prev).abs() < 1e-6 {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// Mixture densities of a whole path over a gamma list: `values[g][loc]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: DensityGrid,
    pub gammas: Vec<f64>,
    pub values: Vec<Vec<Vec<f64>>>,
}

impl DensityField {
    pub fn from_path(path: &MeasureField, kernel: &MixtureKernel, gammas: &[f64], grid: &DensityGrid) -> Result<Self> {
        kernel.ensure_pipeline_ok()?;
        let values = gammas
            .iter()
            .map(|&g| {
                path.measures
                    .iter()
                    .map(|m| mixture_density(m, kernel, g, grid))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: grid.clone(),
            gammas: gammas.to_vec(),
            values,
        })
    }

    /// Largest `|int rho - 1|` over all stored densities.
    pub fn max_normalization_error(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|v| (self.grid.integrate(v) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Columns `y, gamma, loc_index, density`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["y", "gamma", "loc_index", "density"].map(String::from).to_vec());
        for (g, per_loc) in self.gammas.iter().zip(&self.values) {
            for (loc, vals) in per_loc.iter().enumerate() {
                for (y, v) in self.grid.nodes().iter().zip(vals) {
                    t.push(vec![fmt_f64(*y), fmt_f64(*g), loc.to_string(), fmt_f64(*v)]);
                }
            }
        }
        t
    }
}

/// Outcome of the kernel decay check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub family: String,
    pub y0: f64,
    pub gamma0: f64,
    pub epsilon: f64,
    /// `(shell radius, sup of psi over the neighbourhood x shell complement)`.
    pub profile: Vec<(f64, f64)>,
    pub passed: bool,
}

/// Samples `sup psi(y, gamma, theta)` over `U_y0 x U_gamma0 x K_R^c` for each
/// shell radius `R` and passes when the profile drops below `epsilon` and stays there.
///
/// `K_R` is `[y0 - R, y0 + R]` (gaussian_loc), `[1, 1 + R]` (beta_constrained)
/// or `[1, 1 + R]^2` (beta_free). The complement is sampled out to `4 R` past
/// the shell (or the edge of a bounded Theta).
pub fn check_decay_condition(kernel: &MixtureKernel, y0: f64, gamma0: f64, epsilon: f64, shells: &[f64]) -> Result<DecayReport> {
    if shells.is_empty() || shells.windows(2).any(|w| w[0] >= w[1]) || shells[0] <= 0.0 {
        return input("decay shells must be positive and strictly increasing");
    }
    if !(epsilon > 0.0) {
        return input("decay epsilon must be positive");
    }
    let (ys, gammas): (Vec<f64>, Vec<f64>) = match *kernel {
        MixtureKernel::GaussianLoc { gamma_min, gamma_max } => {
            kernel.check_gamma(gamma0)?;
            let ys = (0..11).map(|i| y0 - 0.05 + 0.01 * i as f64).collect();
            let gs = (0..5)
                .map(|i| (gamma0 * (0.9 + 0.05 * i as f64)).clamp(gamma_min, gamma_max))
                .collect();
            (ys, gs)
        }
        MixtureKernel::BetaConstrained { .. } => {
            kernel.check_gamma(gamma0)?;
            let ys = (0..11).map(|i| (y0 - 0.02 + 0.004 * i as f64).clamp(0.0, 1.0)).collect();
            let gs = (0..5)
                .map(|i| (gamma0 * (0.9 + 0.05 * i as f64)).clamp(1.0, BETA_GAMMA_MAX))
                .collect();
            (ys, gs)
        }
        MixtureKernel::BetaFree => {
            let ys = (0..11).map(|i| (y0 - 0.02 + 0.004 * i as f64).clamp(0.0, 1.0)).collect();
            (ys, vec![0.0])
        }
    };

    let profile: Vec<(f64, f64)> = shells
        .iter()
        .map(|&r| {
            let thetas: Vec<Vec<f64>> = match *kernel {
                MixtureKernel::GaussianLoc { .. } => (0..=200)
                    .flat_map(|i| {
                        let off = r + 4.0 * r * i as f64 / 200.0;
                        [vec![y0 - off], vec![y0 + off]]
                    })
                    .collect(),
                MixtureKernel::BetaConstrained { beta_max } => {
                    if 1.0 + r >= beta_max {
                        Vec::new()
                    } else {
                        (1..=200)
                            .map(|i| vec![1.0 + r + (beta_max - 1.0 - r) * i as f64 / 200.0])
                            .collect()
                    }
                }
                MixtureKernel::BetaFree => {
                    let hi = 1.0 + 5.0 * r;
                    let axis: Vec<f64> = (0..=80).map(|i| 1.0 + (hi - 1.0) * i as f64 / 80.0).collect();
                    axis.iter()
                        .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
                        .filter(|t| t[0] > 1.0 + r || t[1] > 1.0 + r)
                        .collect()
                }
            };
            let mut sup = 0.0f64;
            for t in &thetas {
                for &y in &ys {
                    for &g in &gammas {
                        sup = sup.max(kernel.psi(y, g, t));
                    }
                }
            }
            (r, sup)
        })
        .collect();

    let passed = match profile.iter().position(|(_, s)| *s < epsilon) {
        Some(k) => profile[k..].iter().all(|(_, s)| *s < epsilon),
        None => false,
    };
    Ok(DecayReport {
        family: kernel.name().into(),
        y0,
        gamma0,
        epsilon,
        profile,
        passed,
    })
}

/// `psi(1/2, t, t)` for the unconstrained Beta family.
pub fn beta_diagonal_peak(t: f64) -> f64 {
    MixtureKernel::BetaFree.psi(0.5, 0.0, &[t, t])
}

/// Least-squares slope of `log psi(1/2, t, t)` against `log t` on a
/// log-spaced ladder of `points` values in `[t_lo, t_hi]`.
pub fn diagonal_growth_exponent(t_lo: f64, t_hi: f64, points: usize) -> Result<f64> {
    if !(t_lo > 0.0 && t_lo < t_hi) || points < 2 {
        return input("growth exponent needs 0 < t_lo < t_hi and >= 2 points");
    }
    let (a, b) = (t_lo.ln(), t_hi.ln());
    let xs: Vec<f64> = (0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| beta_diagonal_peak(x.exp()).ln()).collect();
    let n = points as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
