//! Vector fields `g0, g1, ..., gm` of an impulsive system together with the
//! regularity metadata (Lipschitz constant, growth bound, modulus of
//! continuity in `v`) used by the error estimates.
//!
//! The dynamics are
//!
//! ```text
//! x' = g0(x, u, v1) + Σ_i gi(x, u, v2) u_i'
//! ```
//!
//! With no `v2` components the impulsive channels depend on `(x, u)` only.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::norm;

/// Evaluator for the drift and the impulsive channels.
pub trait FieldEval: Send + Sync {
    fn drift(&self, x: &[f64], u: &[f64], v1: &[f64], out: &mut [f64]);
    /// Channel `i` in `0..m`, multiplying `u_i'`.
    fn channel(&self, i: usize, x: &[f64], u: &[f64], v2: &[f64], out: &mut [f64]);
}

struct FnFields<D, C> {
    drift: D,
    channel: C,
}

impl<D, C> FieldEval for FnFields<D, C>
where
    D: Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync,
    C: Fn(usize, &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync,
{
    fn drift(&self, x: &[f64], u: &[f64], v1: &[f64], out: &mut [f64]) {
        (self.drift)(x, u, v1, out)
    }
    fn channel(&self, i: usize, x: &[f64], u: &[f64], v2: &[f64], out: &mut [f64]) {
        (self.channel)(i, x, u, v2, out)
    }
}

/// Modulus of continuity `ω` of the fields in `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulus {
    /// `ω(r) = c r`.
    Lipschitz(f64),
    /// Piecewise-linear through the given `(r, ω(r))` points, starting at
    /// `(0, 0)` and extended beyond the last point with the last slope.
    Table(Vec<(f64, f64)>),
}

impl Modulus {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Modulus::Lipschitz(c) => c * r,
            Modulus::Table(pts) => {
                let mut prev = (0.0, 0.0);
                for &(x, y) in pts {
                    if r <= x {
                        let w = if x > prev.0 { (r - prev.0) / (x - prev.0) } else { 1.0 };
                        return prev.1 + w * (y - prev.1);
                    }
                    prev = (x, y);
                }
                let slope = match pts.len() {
                    0 => 0.0,
                    1 => pts[0].1 / pts[0].0.max(f64::MIN_POSITIVE),
                    n => {
                        let (a, b) = (pts[n - 2], pts[n - 1]);
                        (b.1 - a.1) / (b.0 - a.0)
                    }
                };
                prev.1 + slope * (r - prev.0)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Modulus::Lipschitz(c) => *c == 0.0,
            Modulus::Table(pts) => pts.iter().all(|p| p.1 == 0.0),
        }
    }
}

/// Dimensions of a field set: state `n`, channels `m`, and the split of the
/// ordinary control `v = (v1, v2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDims {
    pub n: usize,
    pub m: usize,
    pub v1: usize,
    pub v2: usize,
}

#[derive(Clone)]
pub struct VectorFieldSet {
    name: String,
    dims: FieldDims,
    lipschitz: f64,
    growth: f64,
    modulus: Modulus,
    eval: Arc<dyn FieldEval>,
}

impl fmt::Debug for VectorFieldSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFieldSet")
            .field("name", &self.name)
            .field("dims", &self.dims)
            .field("lipschitz", &self.lipschitz)
            .field("growth", &self.growth)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl VectorFieldSet {
    pub fn new(name: impl Into<String>, dims: FieldDims, eval: Arc<dyn FieldEval>) -> Self {
        Self {
            name: name.into(),
            dims,
            lipschitz: 1.0,
            growth: 1.0,
            modulus: Modulus::Lipschitz(0.0),
            eval,
        }
    }

    /// Register fields from two closures.
    pub fn from_fns<D, C>(name: impl Into<String>, dims: FieldDims, drift: D, channel: C) -> Self
    where
        D: Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        C: Fn(usize, &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::new(name, dims, Arc::new(FnFields { drift, channel }))
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = l;
        self
    }

    pub fn with_growth(mut self, m: f64) -> Self {
        self.growth = m;
        self
    }

    pub fn with_modulus(mut self, w: Modulus) -> Self {
        self.modulus = w;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dims(&self) -> FieldDims {
        self.dims
    }
    pub fn n(&self) -> usize {
        self.dims.n
    }
    pub fn m(&self) -> usize {
        self.dims.m
    }
    pub fn v_dim(&self) -> usize {
        self.dims.v1 + self.dims.v2
    }
    pub fn v2_active(&self) -> bool {
        self.dims.v2 > 0
    }
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    pub fn growth(&self) -> f64 {
        self.growth
    }
    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn drift(&self, x: &[f64], u: &[f64], v1: &[f64], out: &mut [f64]) {
        self.eval.drift(x, u, v1, out)
    }

    pub fn channel(&self, i: usize, x: &[f64], u: &[f64], v2: &[f64], out: &mut [f64]) {
        self.eval.channel(i, x, u, v2, out)
    }

    /// `out = w0 g0(x,u,v1) + Σ rates_i gi(x,u,v2)`. Serves both the
    /// time-parametrized system (`w0 = 1`, `rates = u'`) and the space-time
    /// system (`w0 = φ0'`, `rates = φ'`). `scratch` must have length `n`.
    pub(crate) fn combine(
        &self,
        x: &[f64],
        u: &[f64],
        v: &[f64],
        w0: f64,
        rates: &[f64],
        out: &mut [f64],
        scratch: &mut [f64],
    ) {
        let (v1, v2) = v.split_at(self.dims.v1);
        out.iter_mut().for_each(|o| *o = 0.0);
        if w0 != 0.0 {
            self.eval.drift(x, u, v1, scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += w0 * s;
            }
        }
        for (i, &r) in rates.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            self.eval.channel(i, x, u, v2, scratch);
            for (o, s) in out.iter_mut().zip(scratch.iter()) {
                *o += r * s;
            }
        }
    }
}

/// One sample violating `|gi(x,u,v)| <= M (1 + |(x,u)|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthViolation {
    pub sample: usize,
    /// 0 for the drift, `i` for channel `i - 1`.
    pub field: usize,
    pub magnitude: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrowthReport {
    pub checked: usize,
    pub violations: Vec<GrowthViolation>,
}

impl GrowthReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A sample point `(x, u, v)` for [`check_growth_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Spot-check the declared growth bound on a cloud of samples. Violations are
/// reported, not raised.
pub fn check_growth_bound(fields: &VectorFieldSet, samples: &[FieldSample]) -> Result<GrowthReport> {
    if samples.is_empty() {
        return Err(Error::Config("growth check needs at least one sample".into()));
    }
    let d = fields.dims();
    let mut out = vec![0.0; d.n];
    let mut report = GrowthReport::default();
    for (idx, s) in samples.iter().enumerate() {
        if s.x.len() != d.n {
            return Err(Error::Dimension { expected: d.n, got: s.x.len() });
        }
        if s.v.len() != d.v1 + d.v2 {
            return Err(Error::Dimension { expected: d.v1 + d.v2, got: s.v.len() });
        }
        let xu = (norm(&s.x).powi(2) + norm(&s.u).powi(2)).sqrt();
        let bound = fields.growth * (1.0 + xu);
        let (v1, v2) = s.v.split_at(d.v1);
        fields.drift(&s.x, &s.u, v1, &mut out);
        let mut check = |field: usize, g: &[f64]| {
            let mag = norm(g);
            if mag > bound {
                report.violations.push(GrowthViolation { sample: idx, field, magnitude: mag, bound });
            }
        };
        check(0, &out);
        for i in 0..d.m {
            fields.channel(i, &s.x, &s.u, v2, &mut out);
            check(i + 1, &out);
        }
        report.checked += 1;
    }
    Ok(report)
}

/// Radial cut-off: 1 on `|x| <= r`, 0 on `|x| >= 2r`, cubic smoothstep between.
pub fn smoothstep_cutoff(x: &[f64], r: f64) -> f64 {
    let rho = norm(x);
    if rho <= r {
        1.0
    } else if rho >= 2.0 * r {
        0.0
    } else {
        let s = (rho - r) / r;
        1.0 - s * s * (3.0 - 2.0 * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(name: &str, g: fn(f64) -> f64) -> VectorFieldSet {
        VectorFieldSet::from_fns(
            name,
            FieldDims { n: 1, m: 1, v1: 0, v2: 0 },
            |_, _, _, out| out[0] = 0.0,
            move |_, x, _, _, out| out[0] = g(x[0]),
        )
        .with_growth(1.0)
    }

    #[test]
    fn linear_field_within_bound() {
        let f = scalar("lin", |x| x);
        let samples: Vec<FieldSample> = (-100..=100)
            .map(|i| FieldSample { x: vec![i as f64 / 10.0], u: vec![0.0], v: vec![] })
            .collect();
        assert!(check_growth_bound(&f, &samples).unwrap().is_clean());
    }

    #[test]
    fn quadratic_field_violates() {
        let f = scalar("quad", |x| x * x);
        let r = check_growth_bound(&f, &[FieldSample { x: vec![3.0], u: vec![0.0], v: vec![] }]).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].magnitude, 9.0);
        assert_eq!(r.violations[0].bound, 4.0);
    }

    #[test]
    fn empty_samples_rejected() {
        let f = scalar("lin", |x| x);
        assert!(check_growth_bound(&f, &[]).is_err());
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(smoothstep_cutoff(&[3.0, 4.0], 10.0), 1.0);
        assert_eq!(smoothstep_cutoff(&[20.0], 10.0), 0.0);
        assert!((smoothstep_cutoff(&[15.0], 10.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn modulus_table_interpolates() {
        let w = Modulus::Table(vec![(1.0, 2.0), (2.0, 3.0)]);
        assert_eq!(w.eval(0.5), 1.0);
        assert_eq!(w.eval(1.5), 2.5);
        assert_eq!(w.eval(4.0), 5.0);
        assert_eq!(Modulus::Lipschitz(3.0).eval(2.0), 6.0);
    }
}
