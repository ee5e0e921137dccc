//! Truncated sample paths `x -> G_x`, discrete-measure distances and the
//! partition-of-unity measure-field interpolant.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::atom_process::{
    circle_distance, sample_iid_atoms, wrap_to_circle, AtomField, AtomSampler, AtomSpec, AtomVariant,
};
use crate::error::{input, DsbError, Result};
use crate::index_space::{distance, IndexPoint, LocationSet};
use crate::rng::StreamSeed;
use crate::stick_process::{sample_iid_sticks, stick_weights, StickSampler, StickSpec, TruncatedWeights};
use crate::table::Table;

/// Probability-measure tolerance on total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "DDP")]
    Ddp,
    #[serde(rename = "wDDP")]
    WDdp,
    #[serde(rename = "thetaDDP")]
    ThetaDdp,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Ddp, Variant::WDdp, Variant::ThetaDdp];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Ddp => "DDP",
            Variant::WDdp => "wDDP",
            Variant::ThetaDdp => "thetaDDP",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = DsbError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "DDP" | "ddp" => Ok(Variant::Ddp),
            "wDDP" | "wddp" => Ok(Variant::WDdp),
            "thetaDDP" | "thetaddp" => Ok(Variant::ThetaDdp),
            other => input(format!("unknown process variant '{other}' (expected DDP, wDDP or thetaDDP)")),
        }
    }
}

/// Finitely supported probability measure on Theta.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
}

impl DiscreteMeasure {
    /// `atoms` is the flat list of `weights.len()` points of dimension `dim`.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || atoms.len() != weights.len() * dim {
            return input(format!(
                "measure has {} atom coordinates for {} weights of dimension {dim}",
                atoms.len(),
                weights.len()
            ));
        }
        if weights.is_empty() {
            return input("measure needs at least one atom");
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return input(format!("measure weight {w} is negative or not finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return input(format!("measure weights sum to {total}, not 1"));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return input("measure atoms must be finite");
        }
        Ok(Self { atoms, weights, dim })
    }

    pub fn dirac(atom: Vec<f64>) -> Result<Self> {
        let dim = atom.len();
        Self::new(atom, vec![1.0], dim)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.atoms.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    /// Mass assigned to the box `prod [lo_k, hi_k]`.
    pub fn mass_in_box(&self, region: &[(f64, f64)]) -> f64 {
        self.iter()
            .filter(|(a, _)| a.iter().zip(region).all(|(x, (lo, hi))| lo <= x && x <= hi))
            .map(|(_, w)| w)
            .sum()
    }
}

/// Bounded continuous test function on Theta.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `exp(-|theta - center|^2 / width^2)`; on the circle the arc length replaces `|.|`.
    Bump { center: Vec<f64>, width: f64, periodic: bool },
    /// `cos(k * theta_coord)`.
    Cosine { coord: usize, k: u32 },
    Constant(f64),
}

impl TestFunction {
    pub fn eval(&self, theta: &[f64]) -> f64 {
        match self {
            TestFunction::Bump { center, width, periodic } => {
                let r2: f64 = theta
                    .iter()
                    .zip(center)
                    .map(|(t, c)| {
                        let d = if *periodic { circle_distance(*t, *c) } else { t - c };
                        d * d
                    })
                    .sum();
                (-r2 / (width * width)).exp()
            }
            TestFunction::Cosine { coord, k } => (f64::from(*k) * theta[*coord]).cos(),
            TestFunction::Constant(c) => *c,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            TestFunction::Bump { .. } | TestFunction::Cosine { .. } => 1.0,
            TestFunction::Constant(c) => c.abs(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            TestFunction::Bump { width, .. } => (2.0f64 / std::f64::consts::E).sqrt() / width,
            TestFunction::Cosine { k, .. } => f64::from(*k),
            TestFunction::Constant(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionPanel {
    members: Vec<TestFunction>,
}

impl TestFunctionPanel {
    pub fn new(members: Vec<TestFunction>) -> Result<Self> {
        if members.is_empty() {
            return input("test function panel must be nonempty");
        }
        if let Some(f) = members.iter().find(|f| f.sup_norm() > 1.0) {
            return input(format!("panel member {f:?} exceeds sup-norm 1"));
        }
        Ok(Self { members })
    }

    /// Gaussian bumps on a lattice of `per_axis` centers per coordinate of the
    /// box (width = side / 4), plus `cos(k theta_j)` for k in {1, 2} when
    /// `cosines` is set.
    pub fn lattice(theta_box: &[(f64, f64)], per_axis: usize, cosines: bool, periodic: bool) -> Result<Self> {
        if per_axis == 0 || theta_box.is_empty() {
            return input("panel lattice needs at least one center per axis");
        }
        let axes: Vec<Vec<f64>> = theta_box
            .iter()
            .map(|&(lo, hi)| {
                if per_axis == 1 {
                    vec![0.5 * (lo + hi)]
                } else if periodic {
                    (0..per_axis).map(|i| lo + (hi - lo) * i as f64 / per_axis as f64).collect()
                } else {
                    (0..per_axis)
                        .map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let width = theta_box
            .iter()
            .map(|(lo, hi)| hi - lo)
            .fold(f64::INFINITY, f64::min)
            / 4.0;
        let mut members = Vec::new();
        let total = per_axis.pow(theta_box.len() as u32);
        for flat in 0..total {
            let mut rem = flat;
            let mut center = vec![0.0; theta_box.len()];
            for k in (0..theta_box.len()).rev() {
                center[k] = axes[k][rem % per_axis];
                rem /= per_axis;
            }
            members.push(TestFunction::Bump { center, width, periodic });
        }
        if cosines {
            for coord in 0..theta_box.len() {
                for k in [1, 2] {
                    members.push(TestFunction::Cosine { coord, k });
                }
            }
        }
        Self::new(members)
    }

    /// Five bumps per coordinate plus cosines over the atom law's bulk box.
    pub fn default_for(spec: &AtomSpec) -> Result<Self> {
        Self::lattice(&spec.theta_box(), 5, true, spec.variant_hint == AtomVariant::Circle)
    }

    pub fn members(&self) -> &[TestFunction] {
        &self.members
    }
}

pub fn integrate(m: &DiscreteMeasure, f: &TestFunction) -> f64 {
    // measures carry unit mass, up to rounding in the weights
    if let TestFunction::Constant(c) = f {
        return *c;
    }
    m.iter().map(|(a, w)| w * f.eval(a)).sum()
}

fn atom_key(a: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 denote the same point
    a.iter().map(|x| (x + 0.0).to_bits()).collect()
}

/// Total variation `sum |w1 - w2|` over the merged atom set, in `[0, 2]`.
///
/// Atoms are merged by exact coordinate equality.
pub fn tv_distance(m1: &DiscreteMeasure, m2: &DiscreteMeasure) -> f64 {
    let mut diff: HashMap<Vec<u64>, f64> = HashMap::with_capacity(m1.len() + m2.len());
    let mut order: Vec<Vec<u64>> = Vec::with_capacity(m1.len() + m2.len());
    for (m, sign) in [(m1, 1.0), (m2, -1.0)] {
        for (a, w) in m.iter() {
            let key = atom_key(a);
            match diff.get_mut(&key) {
                Some(v) => *v += sign * w,
                None => {
                    order.push(key.clone());
                    diff.insert(key, sign * w);
                }
            }
        }
    }
    // fixed summation order keeps results reproducible
    let tv: f64 = order.iter().map(|k| diff[k].abs()).sum();
    tv.min(2.0)
}

/// Largest panel discrepancy `max_f |int f dm1 - int f dm2|`.
pub fn weak_panel_distance(m1: &DiscreteMeasure, m2: &DiscreteMeasure, panel: &TestFunctionPanel) -> f64 {
    panel
        .members()
        .iter()
        .map(|f| (integrate(m1, f) - integrate(m2, f)).abs())
        .fold(0.0, f64::max)
}

/// Truncated sample path: one discrete measure per location.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureField {
    pub locations: LocationSet,
    pub measures: Vec<DiscreteMeasure>,
    pub variant: Variant,
    /// Stick mass left over before renormalization, per location.
    pub tail_record: Vec<f64>,
}

impl MeasureField {
    pub fn at(&self, loc: usize) -> &DiscreteMeasure {
        &self.measures[loc]
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    /// Path dump: one row per (location, atom).
    pub fn to_table(&self) -> Table {
        let p = self.locations.dim();
        let d = self.measures.first().map_or(1, DiscreteMeasure::dim);
        let mut header = vec!["loc_index".to_string()];
        header.extend((1..=p).map(|k| format!("x{k}")));
        header.extend((1..=d).map(|k| format!("theta{k}")));
        header.push("weight".into());
        let mut table = Table::new(header);
        for (loc, m) in self.measures.iter().enumerate() {
            for (a, w) in m.iter() {
                let mut row = vec![loc.to_string()];
                row.extend(self.locations.get(loc).coords().iter().map(|c| crate::table::fmt_f64(*c)));
                row.extend(a.iter().map(|c| crate::table::fmt_f64(*c)));
                row.push(crate::table::fmt_f64(w));
                table.push(row);
            }
        }
        table
    }
}

/// Builds `G_x = sum_i pi_i(x) / (1 - tail(x)) delta_{theta_i(x)}` for every location.
pub fn assemble_path(
    locs: &LocationSet,
    weights: &TruncatedWeights,
    atoms: &AtomField,
    variant: Variant,
) -> Result<MeasureField> {
    let (n, l) = (weights.num_sticks(), weights.num_locations());
    if atoms.num_sticks() != n || atoms.num_locations() != l || locs.len() != l {
        return input(format!(
            "weights ({n} x {l}), atoms ({} x {}) and locations ({}) disagree",
            atoms.num_sticks(),
            atoms.num_locations(),
            locs.len()
        ));
    }
    match variant {
        Variant::WDdp if !weights.is_location_invariant() => {
            return input("wDDP assembly requires weights identical across locations")
        }
        Variant::ThetaDdp if !atoms.rows_constant() => {
            return input("thetaDDP assembly requires atoms identical across locations")
        }
        _ => {}
    }
    let d = atoms.dim();
    let mut measures = Vec::with_capacity(l);
    for j in 0..l {
        let tail = weights.tail[j];
        if tail >= 1.0 {
            return input(format!("location {j} has no stick mass to renormalize"));
        }
        let scale = 1.0 - tail;
        let mut flat = Vec::with_capacity(n * d);
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            flat.extend_from_slice(atoms.atom(i, j));
            w.push(weights.weights[(i, j)] / scale);
        }
        measures.push(DiscreteMeasure::new(flat, w, d)?);
    }
    Ok(MeasureField {
        locations: locs.clone(),
        measures,
        variant,
        tail_record: weights.tail.clone(),
    })
}

/// Process description shared by all three variants.
#[derive(Debug, Clone)]
pub struct DdpModel {
    pub variant: Variant,
    pub sticks: StickSpec,
    pub atoms: AtomSpec,
}

impl DdpModel {
    pub fn new(variant: Variant, sticks: StickSpec, atoms: AtomSpec) -> Result<Self> {
        if variant == Variant::WDdp && sticks.alpha.as_constant().is_none() {
            return input("wDDP requires a constant alpha");
        }
        Ok(Self { variant, sticks, atoms })
    }

    /// Factor the covariance matrices once for repeated path draws on `locs`.
    pub fn prepare(&self, locs: &LocationSet) -> Result<PathSampler> {
        let sticks = match self.variant {
            Variant::WDdp => None,
            _ => Some(StickSampler::new(&self.sticks, locs)?),
        };
        let atoms = match self.variant {
            Variant::ThetaDdp => None,
            _ => Some(AtomSampler::new(&self.atoms, locs)?),
        };
        Ok(PathSampler {
            model: self.clone(),
            locs: locs.clone(),
            sticks,
            atoms,
            count: self.sticks.num_sticks(),
        })
    }

    pub fn sample_path(&self, locs: &LocationSet, seed: &StreamSeed) -> Result<MeasureField> {
        self.prepare(locs)?.sample(seed)
    }
}

#[derive(Debug, Clone)]
pub struct PathSampler {
    model: DdpModel,
    locs: LocationSet,
    sticks: Option<StickSampler>,
    atoms: Option<AtomSampler>,
    count: usize,
}

impl PathSampler {
    pub fn locations(&self) -> &LocationSet {
        &self.locs
    }

    pub fn num_sticks(&self) -> usize {
        self.count
    }

    pub fn sample(&self, seed: &StreamSeed) -> Result<MeasureField> {
        let l = self.locs.len();
        let stick_seed = seed.named("sticks");
        let atom_seed = seed.named("atoms");
        let v = match &self.sticks {
            Some(s) => s.sample(&stick_seed),
            None => {
                let alpha = self.model.sticks.alpha.as_constant().expect("checked in DdpModel::new");
                sample_iid_sticks(alpha, self.count, l, &stick_seed)
            }
        };
        let mut atoms = match &self.atoms {
            Some(a) => a.sample(self.count, &atom_seed),
            None => sample_iid_atoms(&self.model.atoms, self.count, l, &mut atom_seed.rng())?,
        };
        if self.model.atoms.variant_hint == AtomVariant::Circle {
            let iid = atoms.variant() == AtomVariant::Iid;
            atoms = wrap_to_circle(&atoms)?;
            debug_assert!(!iid || atoms.rows_constant());
        }
        assemble_path(&self.locs, &stick_weights(&v)?, &atoms, self.model.variant)
    }
}

/// Normalized hat-function weights `phi_k(x)` of the nodes around `query`.
///
/// Weights are quantized to multiples of 2^-53 with the residue given to the
/// largest one; every partial sum is then representable, so the weights add
/// to exactly 1 in any order.
pub fn partition_of_unity(nodes: &LocationSet, radius: f64, query: &IndexPoint) -> Result<Vec<f64>> {
    if !(radius.is_finite() && radius > 0.0) {
        return input(format!("partition radius must be positive, got {radius}"));
    }
    let raw = nodes
        .points()
        .iter()
        .map(|x| Ok((1.0 - distance(query, x)? / radius).max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = raw.iter().sum();
    if total <= 0.0 {
        return Err(DsbError::NoNodeInRadius { radius });
    }
    const UNIT: u64 = 1 << 53;
    let mut ticks: Vec<u64> = raw.iter().map(|r| (r / total * UNIT as f64).round() as u64).collect();
    let kmax = (0..raw.len())
        .max_by(|&a, &b| raw[a].total_cmp(&raw[b]))
        .expect("nonempty");
    let others: u64 = ticks.iter().enumerate().filter(|(k, _)| *k != kmax).map(|(_, t)| t).sum();
    ticks[kmax] = UNIT - others;
    Ok(ticks.into_iter().map(|t| t as f64 / UNIT as f64).collect())
}

/// `P_bar(x) = sum_k phi_k(x) P_{x_k}` with hat functions of radius `radius`.
pub fn interpolate_measure_field(
    nodes: &LocationSet,
    node_measures: &[DiscreteMeasure],
    radius: f64,
    query: &IndexPoint,
) -> Result<DiscreteMeasure> {
    if node_measures.len() != nodes.len() {
        return input("one measure per node is required");
    }
    let dim = node_measures[0].dim();
    if node_measures.iter().any(|m| m.dim() != dim) {
        return input("node measures must share the atom dimension");
    }
    let phi = partition_of_unity(nodes, radius, query)?;
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (m, p) in node_measures.iter().zip(&phi) {
        if *p == 0.0 {
            continue;
        }
        for (a, w) in m.iter() {
            atoms.extend_from_slice(a);
            weights.push(p * w);
        }
    }
    DiscreteMeasure::new(atoms, weights, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index_space::{build_grid, Domain};
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn measure(atoms: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(atoms.to_vec(), weights.to_vec(), 1).unwrap()
    }

    fn line(xs: &[f64]) -> LocationSet {
        LocationSet::new(
            xs.iter().map(|&x| IndexPoint::scalar(x).unwrap()).collect(),
            Domain::cube(-5.0, 5.0, 1).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_stick_is_dirac() {
        let locs = line(&[0.0, 1.0]);
        let w = stick_weights(&DMatrix::from_vec(1, 2, vec![1.0, 1.0])).unwrap();
        let atoms = AtomField::from_raw(vec![0.3, -0.7], 1, 2, 1, AtomVariant::Field).unwrap();
        let path = assemble_path(&locs, &w, &atoms, Variant::Ddp).unwrap();
        assert_eq!(path.at(0), &DiscreteMeasure::dirac(vec![0.3]).unwrap());
        assert_eq!(path.at(1), &DiscreteMeasure::dirac(vec![-0.7]).unwrap());
        assert_eq!(path.tail_record, vec![0.0, 0.0]);
    }

    #[test]
    fn renormalization_arithmetic() {
        let locs = line(&[0.0]);
        let w = stick_weights(&DMatrix::from_vec(3, 1, vec![0.5, 0.5, 0.5])).unwrap();
        let atoms = AtomField::from_raw(vec![1.0, 2.0, 3.0], 3, 1, 1, AtomVariant::Iid).unwrap();
        let path = assemble_path(&locs, &w, &atoms, Variant::ThetaDdp).unwrap();
        assert_eq!(path.at(0).weights(), &[4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]);
        assert_eq!(path.tail_record, vec![0.125]);
    }

    #[test]
    fn variant_structure_enforced() {
        let locs = line(&[0.0, 1.0]);
        let w = stick_weights(&DMatrix::from_vec(1, 2, vec![0.5, 0.7])).unwrap();
        let moving = AtomField::from_raw(vec![0.0, 1.0], 1, 2, 1, AtomVariant::Field).unwrap();
        assert!(assemble_path(&locs, &w, &moving, Variant::ThetaDdp).is_err());
        assert!(assemble_path(&locs, &w, &moving, Variant::WDdp).is_err());
        assert!(assemble_path(&locs, &w, &moving, Variant::Ddp).is_ok());
        let w0 = stick_weights(&DMatrix::zeros(1, 2)).unwrap();
        assert!(assemble_path(&locs, &w0, &moving, Variant::Ddp).is_err());
    }

    #[test]
    fn integrate_examples() {
        let m = measure(&[0.0, 1.0], &[0.5, 0.5]);
        assert_eq!(integrate(&m, &TestFunction::Constant(1.0)), 1.0);
        let f = TestFunction::Cosine { coord: 0, k: 1 };
        let dirac = DiscreteMeasure::dirac(vec![0.4]).unwrap();
        assert_eq!(integrate(&dirac, &f), 0.4f64.cos());
        let step = TestFunction::Bump { center: vec![1.0], width: 1e-3, periodic: false };
        assert_eq!(integrate(&m, &step), 0.5);
    }

    #[test]
    fn tv_examples() {
        let m = measure(&[0.0, 1.0], &[0.6, 0.4]);
        assert_eq!(tv_distance(&m, &m), 0.0);
        let a = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        let b = DiscreteMeasure::dirac(vec![1.0]).unwrap();
        assert_eq!(tv_distance(&a, &b), 2.0);
        let n = measure(&[0.0, 1.0], &[0.5, 0.5]);
        assert!((tv_distance(&m, &n) - 0.2).abs() < 1e-15);
        // -0.0 and 0.0 merge
        assert_eq!(tv_distance(&a, &DiscreteMeasure::dirac(vec![-0.0]).unwrap()), 0.0);
    }

    #[test]
    fn panel_examples() {
        let panel = TestFunctionPanel::lattice(&[(-3.0, 3.0)], 5, true, false).unwrap();
        assert_eq!(panel.members().len(), 7);
        let m = measure(&[0.0, 1.0], &[0.6, 0.4]);
        assert_eq!(weak_panel_distance(&m, &m, &panel), 0.0);

        let bumps_only = TestFunctionPanel::lattice(&[(-3.0, 3.0)], 5, false, false).unwrap();
        let a = DiscreteMeasure::dirac(vec![1e6]).unwrap();
        let b = DiscreteMeasure::dirac(vec![-1e6]).unwrap();
        assert_eq!(weak_panel_distance(&a, &b, &bumps_only), 0.0);
        assert_eq!(tv_distance(&a, &b), 2.0);
        assert!(TestFunctionPanel::new(vec![TestFunction::Constant(1.5)]).is_err());
        assert!(TestFunctionPanel::new(vec![]).is_err());
    }

    proptest! {
        #[test]
        fn panel_below_tv(xs in proptest::collection::vec(-3.0..3.0f64, 1..6),
                          ws in proptest::collection::vec(0.01..1.0f64, 6),
                          shift in proptest::bool::ANY) {
            let n = xs.len();
            let s1: f64 = ws[..n].iter().sum();
            let w1: Vec<f64> = ws[..n].iter().map(|w| w / s1).collect();
            let w2: Vec<f64> = w1.iter().rev().cloned().collect();
            let ys: Vec<f64> = if shift { xs.iter().map(|x| x + 0.1).collect() } else { xs.clone() };
            let m1 = measure(&xs, &w1);
            let m2 = measure(&ys, &w2);
            let panel = TestFunctionPanel::lattice(&[(-3.0, 3.0)], 5, true, false).unwrap();
            let tv = tv_distance(&m1, &m2);
            prop_assert!(weak_panel_distance(&m1, &m2, &panel) <= tv + 1e-12);
            prop_assert!((tv - tv_distance(&m2, &m1)).abs() < 1e-15);
            prop_assert!((0.0..=2.0).contains(&tv));
        }
    }

    #[test]
    fn interpolant_examples() {
        let nodes = line(&[0.0]);
        let m = measure(&[0.5, 1.5], &[0.25, 0.75]);
        let q = IndexPoint::scalar(0.3).unwrap();
        let out = interpolate_measure_field(&nodes, &[m.clone()], 0.5, &q).unwrap();
        assert_eq!(out, m);

        let nodes = line(&[0.0, 1.0]);
        let a = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        let b = DiscreteMeasure::dirac(vec![1.0]).unwrap();
        let mid = interpolate_measure_field(&nodes, &[a.clone(), b.clone()], 0.8, &IndexPoint::scalar(0.5).unwrap()).unwrap();
        assert_eq!(mid.weights(), &[0.5, 0.5]);

        let at = interpolate_measure_field(&nodes, &[a.clone(), b.clone()], 0.8, &IndexPoint::scalar(0.0).unwrap()).unwrap();
        assert_eq!(at, a);

        let far = interpolate_measure_field(&nodes, &[a, b], 0.2, &IndexPoint::scalar(3.0).unwrap());
        assert!(matches!(far, Err(DsbError::NoNodeInRadius { .. })));
    }

    #[test]
    fn partition_sums_to_one() {
        let nodes = build_grid(&Domain::cube(0.0, 1.0, 1).unwrap(), &[21]).unwrap();
        let grid = build_grid(&Domain::cube(0.0, 1.0, 1).unwrap(), &[997]).unwrap();
        for q in grid.points() {
            let w = partition_of_unity(&nodes, 0.13, q).unwrap();
            assert_eq!(w.iter().sum::<f64>(), 1.0);
            assert!(w.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn sampled_paths_have_variant_structure() {
        use crate::atom_process::Marginal;
        use crate::latent_field::CovKernelSpec;
        use crate::stick_process::{Alpha, Truncation};
        let k = CovKernelSpec::new(1.0, 1.0, 0.0).unwrap();
        let sticks = StickSpec::new(Alpha::constant(1.0).unwrap(), k, Truncation::Sticks(20)).unwrap();
        let atoms = AtomSpec::new(vec![Marginal::normal(0.0, 1.0).unwrap()], k, AtomVariant::Field).unwrap();
        let locs = line(&[0.0, 0.5, 1.0]);
        for v in Variant::ALL {
            let model = DdpModel::new(v, sticks.clone(), atoms.clone()).unwrap();
            let p = model.sample_path(&locs, &StreamSeed::new(4)).unwrap();
            assert_eq!(p, model.sample_path(&locs, &StreamSeed::new(4)).unwrap());
            for m in &p.measures {
                assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < MASS_TOLERANCE);
            }
            match v {
                Variant::ThetaDdp => {
                    for j in 1..3 {
                        for i in 0..20 {
                            assert_eq!(p.at(j).atom(i), p.at(0).atom(i));
                        }
                    }
                }
                Variant::WDdp => {
                    for j in 1..3 {
                        assert_eq!(p.at(j).weights(), p.at(0).weights());
                    }
                }
                Variant::Ddp => {}
            }
        }
    }
}
