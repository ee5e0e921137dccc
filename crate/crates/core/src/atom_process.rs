//! Atom sequences: iid atoms, location-dependent atom fields and the circle quotient.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::latent_field::{standard_cdf, CovKernelSpec, GaussianSampler};
use crate::index_space::LocationSet;
use crate::rng::StreamSeed;

/// Target marginal law of one atom coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Marginal {
    Normal { mean: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Marginal {
    pub fn normal(mean: f64, scale: f64) -> Result<Self> {
        if !(mean.is_finite() && scale.is_finite() && scale > 0.0) {
            return input(format!("normal marginal needs finite mean and scale > 0, got ({mean}, {scale})"));
        }
        Ok(Marginal::Normal { mean, scale })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return input(format!("uniform marginal needs lo < hi, got [{lo}, {hi}]"));
        }
        Ok(Marginal::Uniform { lo, hi })
    }

    /// `Q(Phi(w))` for a standard normal input `w`.
    ///
    /// For the normal family the composition collapses to `mean + scale * w`.
    pub fn from_standard(&self, w: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, scale } => mean + scale * w,
            Marginal::Uniform { lo, hi } => lo + (hi - lo) * standard_cdf(w),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, scale } => standard_cdf((x - mean) / scale),
            Marginal::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    /// Interval carrying essentially all of the mass (`mean +- 3 scale` for normals).
    pub fn bulk(&self) -> (f64, f64) {
        match *self {
            Marginal::Normal { mean, scale } => (mean - 3.0 * scale, mean + 3.0 * scale),
            Marginal::Uniform { lo, hi } => (lo, hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomVariant {
    Iid,
    Field,
    Circle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpec {
    marginals: Vec<Marginal>,
    pub kernel: CovKernelSpec,
    pub variant_hint: AtomVariant,
}

impl AtomSpec {
    pub fn new(marginals: Vec<Marginal>, kernel: CovKernelSpec, variant_hint: AtomVariant) -> Result<Self> {
        if marginals.is_empty() {
            return input("atom dimension must be at least 1");
        }
        if variant_hint == AtomVariant::Circle && marginals.len() != 1 {
            return input("circle-valued atoms require theta_dim = 1");
        }
        Ok(Self {
            marginals,
            kernel,
            variant_hint,
        })
    }

    pub fn theta_dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    /// Box in Theta used to place default test functions.
    pub fn theta_box(&self) -> Vec<(f64, f64)> {
        if self.variant_hint == AtomVariant::Circle {
            return vec![(0.0, TAU)];
        }
        self.marginals.iter().map(Marginal::bulk).collect()
    }
}

/// Atoms `theta_i(x)` stored stick-major: `[stick][location][coordinate]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomField {
    atoms: Vec<f64>,
    sticks: usize,
    locations: usize,
    dim: usize,
    variant: AtomVariant,
}

impl AtomField {
    pub fn from_raw(
        atoms: Vec<f64>,
        sticks: usize,
        locations: usize,
        dim: usize,
        variant: AtomVariant,
    ) -> Result<Self> {
        if atoms.len() != sticks * locations * dim {
            return input(format!(
                "atom buffer has {} entries, expected {sticks} x {locations} x {dim}",
                atoms.len()
            ));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return input("atom coordinates must be finite");
        }
        let field = Self {
            atoms,
            sticks,
            locations,
            dim,
            variant,
        };
        if variant == AtomVariant::Iid && !field.rows_constant() {
            return input("iid atom field must be constant across locations");
        }
        if variant == AtomVariant::Circle && (dim != 1 || field.atoms.iter().any(|a| !(0.0..TAU).contains(a))) {
            return input("circle atoms must be one-dimensional and lie in [0, 2pi)");
        }
        Ok(field)
    }

    pub fn atom(&self, stick: usize, loc: usize) -> &[f64] {
        let start = (stick * self.locations + loc) * self.dim;
        &self.atoms[start..start + self.dim]
    }

    pub fn num_sticks(&self) -> usize {
        self.sticks
    }

    pub fn num_locations(&self) -> usize {
        self.locations
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> AtomVariant {
        self.variant
    }

    /// True when each stick's atom is bitwise identical at every location.
    pub fn rows_constant(&self) -> bool {
        (0..self.sticks).all(|i| (1..self.locations).all(|j| self.atom(i, j) == self.atom(i, 0)))
    }
}

pub fn sample_iid_atoms<R: Rng + ?Sized>(
    spec: &AtomSpec,
    count: usize,
    locations: usize,
    rng: &mut R,
) -> Result<AtomField> {
    if count == 0 || locations == 0 {
        return input("atom count and location count must be positive");
    }
    let d = spec.theta_dim();
    let mut atoms = Vec::with_capacity(count * locations * d);
    for _ in 0..count {
        let row: Vec<f64> = spec
            .marginals
            .iter()
            .map(|m| m.from_standard(rng.sample(StandardNormal)))
            .collect();
        for _ in 0..locations {
            atoms.extend_from_slice(&row);
        }
    }
    Ok(AtomField {
        atoms,
        sticks: count,
        locations,
        dim: d,
        variant: AtomVariant::Iid,
    })
}

/// Prepared sampler for location-dependent atoms.
///
/// Coordinate `j` of atom `i` is `Q_j(Phi((Z(x) - mu) / sqrt(sigma0)))` where `Z`
/// is an independent latent field drawn from `seed.child(i).child(j)`.
#[derive(Debug, Clone)]
pub struct AtomSampler {
    field: GaussianSampler,
    kernel: CovKernelSpec,
    marginals: Vec<Marginal>,
    locations: usize,
}

impl AtomSampler {
    pub fn new(spec: &AtomSpec, locs: &LocationSet) -> Result<Self> {
        Ok(Self {
            field: GaussianSampler::new(&spec.kernel, locs)?,
            kernel: spec.kernel,
            marginals: spec.marginals.clone(),
            locations: locs.len(),
        })
    }

    pub fn sample(&self, count: usize, seed: &StreamSeed) -> AtomField {
        let (l, d) = (self.locations, self.marginals.len());
        let mut atoms = vec![0.0; count * l * d];
        for i in 0..count {
            let stick_seed = seed.child(i as u64);
            for (j, m) in self.marginals.iter().enumerate() {
                let z = self.field.draw(&mut stick_seed.child(j as u64).rng());
                for (loc, zv) in z.iter().enumerate() {
                    atoms[(i * l + loc) * d + j] = m.from_standard(self.kernel.standardize(*zv));
                }
            }
        }
        AtomField {
            atoms,
            sticks: count,
            locations: l,
            dim: d,
            variant: AtomVariant::Field,
        }
    }
}

pub fn sample_atom_field(
    spec: &AtomSpec,
    locs: &LocationSet,
    count: usize,
    seed: &StreamSeed,
) -> Result<AtomField> {
    if count == 0 {
        return input("atom count must be positive");
    }
    Ok(AtomSampler::new(spec, locs)?.sample(count, seed))
}

/// Representative of `x mod 2 pi` in `[0, 2 pi)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub fn wrap_to_circle(field: &AtomField) -> Result<AtomField> {
    if field.dim != 1 {
        return input("wrap_to_circle needs one-dimensional atoms");
    }
    let mut out = field.clone();
    out.atoms.iter_mut().for_each(|a| *a = wrap_angle(*a));
    out.variant = AtomVariant::Circle;
    Ok(out)
}

/// Arc-length distance on the unit circle.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_space::{Domain, IndexPoint};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn kernel(sigma0: f64) -> CovKernelSpec {
        CovKernelSpec::new(sigma0, 1.0, 0.0).unwrap()
    }

    fn line(xs: &[f64]) -> LocationSet {
        LocationSet::new(
            xs.iter().map(|&x| IndexPoint::scalar(x).unwrap()).collect(),
            Domain::cube(-1.0, 10.0, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn iid_uniform_mean() {
        let spec = AtomSpec::new(vec![Marginal::uniform(0.0, 1.0).unwrap()], kernel(1.0), AtomVariant::Iid).unwrap();
        let n = 10_000;
        let f = sample_iid_atoms(&spec, n, 3, &mut StreamSeed::new(1).rng()).unwrap();
        assert!(f.rows_constant());
        let mean = (0..n).map(|i| f.atom(i, 0)[0]).sum::<f64>() / n as f64;
        let tol = 3.0 * (1.0 / 12f64).sqrt() / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < tol);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(Marginal::uniform(1.0, 1.0).is_err());
        assert!(Marginal::normal(0.0, 0.0).is_err());
        let m = Marginal::normal(0.0, 1.0).unwrap();
        assert!(AtomSpec::new(vec![], kernel(1.0), AtomVariant::Field).is_err());
        assert!(AtomSpec::new(vec![m, m], kernel(1.0), AtomVariant::Circle).is_err());
        assert!(AtomField::from_raw(vec![0.0, 1.0], 1, 2, 1, AtomVariant::Iid).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = AtomSpec::new(vec![Marginal::normal(0.0, 1.0).unwrap(); 2], kernel(1.0), AtomVariant::Field).unwrap();
        let locs = line(&[0.0, 0.5, 1.0]);
        let a = sample_atom_field(&spec, &locs, 4, &StreamSeed::new(3)).unwrap();
        let b = sample_atom_field(&spec, &locs, 4, &StreamSeed::new(3)).unwrap();
        assert_eq!(a, b);
        let c = sample_iid_atoms(&spec, 4, 3, &mut StreamSeed::new(3).rng()).unwrap();
        let d = sample_iid_atoms(&spec, 4, 3, &mut StreamSeed::new(3).rng()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn degenerate_field_rows_constant() {
        // Standardizing by sqrt(sigma0) removes the variance scale, so the
        // degenerate limit is perfect correlation (tau -> inf). Diagonal jitter
        // leaves independent noise of order sqrt(1e-10) per location.
        let k = CovKernelSpec::new(1e-30, 1e8, 0.0).unwrap();
        let spec = AtomSpec::new(vec![Marginal::uniform(-2.0, 2.0).unwrap()], k, AtomVariant::Field).unwrap();
        let f = sample_atom_field(&spec, &line(&[0.0, 0.4, 3.0]), 10, &StreamSeed::new(8)).unwrap();
        for i in 0..10 {
            for j in 1..3 {
                assert!((f.atom(i, j)[0] - f.atom(i, 0)[0]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn circle_examples() {
        assert_eq!(wrap_angle(TAU), 0.0);
        assert_eq!(wrap_angle(FRAC_PI_2), FRAC_PI_2);
        assert!((wrap_angle(-FRAC_PI_2) - 3.0 * FRAC_PI_2).abs() < 1e-15);
        assert!(wrap_angle(-1e-18) < TAU);
        assert!((circle_distance(0.1, TAU - 0.1) - 0.2).abs() < 1e-12);
        assert!((circle_distance(0.0, PI) - PI).abs() < 1e-15);

        let raw = AtomField::from_raw(vec![TAU, FRAC_PI_2, -FRAC_PI_2, 7.0], 2, 2, 1, AtomVariant::Field).unwrap();
        let w = wrap_to_circle(&raw).unwrap();
        assert_eq!(w.variant(), AtomVariant::Circle);
        assert_eq!(w.atom(0, 0), &[0.0]);
        assert!(w.atom(1, 1)[0] < TAU && w.atom(1, 1)[0] >= 0.0);
    }
}
