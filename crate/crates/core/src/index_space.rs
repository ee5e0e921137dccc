//! Predictor space: axis-aligned boxes in R^p with the Euclidean metric.

use serde::{Deserialize, Serialize};

use crate::error::{input, DsbError, Result};

/// Points closer than this are treated as duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexPoint(Vec<f64>);

impl IndexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return input("index point needs at least one coordinate");
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return input(format!("index point coordinate {c} is not finite"));
        }
        Ok(Self(coords))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Euclidean distance between two index points of equal dimension.
pub fn distance(a: &IndexPoint, b: &IndexPoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(DsbError::Dimension {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(sq_dist(a.coords(), b.coords()).sqrt())
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_p, hi_p]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return input(format!(
                "domain bounds must be nonempty and of equal length (got {} and {})",
                lo.len(),
                hi.len()
            ));
        }
        for (axis, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return input(format!("degenerate domain on axis {axis}: [{l}, {h}]"));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The box `[lo, hi]^p`.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, p: &IndexPoint) -> bool {
        p.dim() == self.dim()
            && p
                .coords()
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(c, (l, h))| *l <= *c && *c <= *h)
    }
}

/// Finite ordered set of distinct points inside a domain box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationSet {
    points: Vec<IndexPoint>,
    domain: Domain,
}

impl LocationSet {
    pub fn new(points: Vec<IndexPoint>, domain: Domain) -> Result<Self> {
        if points.is_empty() {
            return input("location set must be nonempty");
        }
        for (i, p) in points.iter().enumerate() {
            if p.dim() != domain.dim() {
                return Err(DsbError::Dimension {
                    expected: domain.dim(),
                    got: p.dim(),
                });
            }
            if !domain.contains(p) {
                return input(format!("location {i} {:?} lies outside the domain", p.coords()));
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if sq_dist(points[i].coords(), points[j].coords()).sqrt() < DUPLICATE_TOLERANCE {
                    return input(format!("locations {j} and {i} are duplicates"));
                }
            }
        }
        Ok(Self { points, domain })
    }

    /// Reference point followed by `x0 + d * e_1` for each distance in `ladder`.
    pub fn ladder(domain: Domain, x0: &IndexPoint, ladder: &[f64]) -> Result<Self> {
        let mut pts = Vec::with_capacity(ladder.len() + 1);
        pts.push(x0.clone());
        for &d in ladder {
            let mut c = x0.coords().to_vec();
            c[0] += d;
            pts.push(IndexPoint::new(c)?);
        }
        Self::new(pts, domain)
    }

    pub fn points(&self) -> &[IndexPoint] {
        &self.points
    }

    pub fn get(&self, i: usize) -> &IndexPoint {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
}

/// Uniform tensor lattice on `domain` with `resolution[k]` points on axis `k`.
///
/// With resolution >= 2 both box endpoints are included; resolution 1 places
/// the single node at the lower corner. Points are ordered with the last axis
/// varying fastest.
pub fn build_grid(domain: &Domain, resolution: &[usize]) -> Result<LocationSet> {
    if resolution.len() != domain.dim() {
        return Err(DsbError::Dimension {
            expected: domain.dim(),
            got: resolution.len(),
        });
    }
    if resolution.contains(&0) {
        return input("grid resolution must be at least 1 on every axis");
    }
    let axes: Vec<Vec<f64>> = resolution
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let (lo, hi) = (domain.lo()[k], domain.hi()[k]);
            if r == 1 {
                vec![lo]
            } else {
                (0..r)
                    .map(|i| {
                        if i == r - 1 {
                            hi
                        } else {
                            lo + (hi - lo) * i as f64 / (r - 1) as f64
                        }
                    })
                    .collect()
            }
        })
        .collect();

    let total: usize = resolution.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; resolution.len()];
    for _ in 0..total {
        points.push(IndexPoint(
            idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect(),
        ));
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < resolution[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    LocationSet::new(points, domain.clone())
}
