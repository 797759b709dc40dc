//! Compact control sets `U` and `V` and their Whitney geometry.
//!
//! For the convex geometries the straight segment is
//! a Whitney bridge with constant `C = 1`. A [`Geometry::StarUnion`] is a
//! finite union of convex parts sharing a common center; bridges between
//! points of different parts route through that center, and the caller
//! declares the constant `C` that bounds the detour.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{dist, norm};

const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Geometry {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{ p : a_i · p <= b_i }`, assumed bounded.
    Polytope { a: Vec<Vec<f64>>, b: Vec<f64> },
    StarUnion { center: Vec<f64>, parts: Vec<Geometry> },
}

/// A compact control set together with its Whitney constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSet {
    pub geometry: Geometry,
    pub whitney: f64,
}

impl ControlSet {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h)) {
            return Err(Error::Config("box bounds must be finite with lo <= hi".into()));
        }
        Ok(Self { geometry: Geometry::Box { lo, hi }, whitney: 1.0 })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::Config("ball radius must be finite and nonnegative".into()));
        }
        Ok(Self { geometry: Geometry::Ball { center, radius }, whitney: 1.0 })
    }

    pub fn polytope(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::Config("polytope needs one bound per constraint row".into()));
        }
        let d = a[0].len();
        if a.iter().any(|row| row.len() != d) {
            return Err(Error::Config("polytope rows have inconsistent dimension".into()));
        }
        Ok(Self { geometry: Geometry::Polytope { a, b }, whitney: 1.0 })
    }

    /// Union of convex parts that all contain `center`.
    pub fn star_union(center: Vec<f64>, parts: Vec<ControlSet>, whitney: f64) -> Result<Self> {
        if whitney < 1.0 {
            return Err(Error::Config("Whitney constant must be >= 1".into()));
        }
        let mut geoms = Vec::with_capacity(parts.len());
        for p in parts {
            if !matches!(p.geometry, Geometry::Box { .. } | Geometry::Ball { .. } | Geometry::Polytope { .. }) {
                return Err(Error::Config("star-union parts must be convex".into()));
            }
            if !p.contains(&center) {
                return Err(Error::Config("every star-union part must contain the center".into()));
            }
            geoms.push(p.geometry);
        }
        if geoms.is_empty() {
            return Err(Error::Config("star union needs at least one part".into()));
        }
        Ok(Self { geometry: Geometry::StarUnion { center, parts: geoms }, whitney })
    }

    pub fn dim(&self) -> usize {
        geom_dim(&self.geometry)
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self.geometry, Geometry::StarUnion { .. })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && geom_contains(&self.geometry, p)
    }

    /// Nearest point of the set (Euclidean). Points of the set are returned unchanged.
    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        if self.contains(p) {
            return p.to_vec();
        }
        geom_project(&self.geometry, p)
    }

    /// Convex part containing both points, if one exists.
    pub(crate) fn common_part(&self, a: &[f64], b: &[f64]) -> bool {
        match &self.geometry {
            Geometry::StarUnion { parts, .. } => parts
                .iter()
                .any(|g| geom_contains(g, a) && geom_contains(g, b)),
            _ => true,
        }
    }

    pub(crate) fn star_center(&self) -> Option<&[f64]> {
        match &self.geometry {
            Geometry::StarUnion { center, .. } => Some(center),
            _ => None,
        }
    }
}

fn geom_dim(g: &Geometry) -> usize {
    match g {
        Geometry::Box { lo, .. } => lo.len(),
        Geometry::Ball { center, .. } => center.len(),
        Geometry::Polytope { a, .. } => a[0].len(),
        Geometry::StarUnion { center, .. } => center.len(),
    }
}

fn geom_contains(g: &Geometry, p: &[f64]) -> bool {
    match g {
        Geometry::Box { lo, hi } => p
            .iter()
            .zip(lo.iter().zip(hi))
            .all(|(x, (l, h))| *x >= l - MEMBERSHIP_TOL && *x <= h + MEMBERSHIP_TOL),
        Geometry::Ball { center, radius } => dist(p, center) <= radius + MEMBERSHIP_TOL,
        Geometry::Polytope { a, b } => a
            .iter()
            .zip(b)
            .all(|(row, bi)| dot(row, p) <= bi + MEMBERSHIP_TOL),
        Geometry::StarUnion { parts, .. } => parts.iter().any(|g| geom_contains(g, p)),
    }
}

fn geom_project(g: &Geometry, p: &[f64]) -> Vec<f64> {
    match g {
        Geometry::Box { lo, hi } => p
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(x, (l, h))| x.clamp(*l, *h))
            .collect(),
        Geometry::Ball { center, radius } => {
            let d: Vec<f64> = p.iter().zip(center).map(|(x, c)| x - c).collect();
            let r = norm(&d);
            if r <= *radius {
                return p.to_vec();
            }
            center.iter().zip(&d).map(|(c, di)| c + di * radius / r).collect()
        }
        Geometry::Polytope { a, b } => dykstra(a, b, p),
        Geometry::StarUnion { parts, .. } => parts
            .iter()
            .map(|g| geom_project(g, p))
            .min_by(|x, y| dist(x, p).partial_cmp(&dist(y, p)).unwrap())
            .expect("star union has parts"),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Dykstra's alternating projections onto the half-spaces of the polytope.
fn dykstra(a: &[Vec<f64>], b: &[f64], p: &[f64]) -> Vec<f64> {
    let d = p.len();
    let mut x = p.to_vec();
    let mut incr = vec![vec![0.0; d]; a.len()];
    for _ in 0..100_000 {
        let prev = x.clone();
        for (i, (row, bi)) in a.iter().zip(b).enumerate() {
            let y: Vec<f64> = x.iter().zip(&incr[i]).map(|(xi, ci)| xi + ci).collect();
            let nn = dot(row, row);
            let viol = dot(row, &y) - bi;
            let proj: Vec<f64> = if viol > 0.0 && nn > 0.0 {
                y.iter().zip(row).map(|(yi, ri)| yi - viol / nn * ri).collect()
            } else {
                y.clone()
            };
            for k in 0..d {
                incr[i][k] = y[k] - proj[k];
            }
            x = proj;
        }
        if dist(&x, &prev) < 1e-15 {
            break;
        }
    }
    x
}
