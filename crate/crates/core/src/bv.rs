//! Bounded-variation control paths `u` and piecewise-constant ordinary
//! controls `v`.
//!
//! A [`ControlPath`] is stored as a list of knots `(t_i, u_i)` with
//! nondecreasing times; `u` is linear between knots with distinct times and a
//! repeated time marks a jump from the first value to the second. The
//! pointwise representative is right-continuous except at `t = 0`, where
//! `u(0) = ū0` is the value before any jump at the origin.

use serde::{Deserialize, Serialize};

use crate::control_set::ControlSet;
use crate::error::{Error, Result};
use crate::num::{dist, integrate_linear_norm, locate, merge_points};

const TIME_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath {
    dim: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    cumvar: Vec<f64>,
}

/// A jump of a [`ControlPath`].
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub t: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl Jump {
    pub fn magnitude(&self) -> f64 {
        dist(&self.left, &self.right)
    }
}

impl ControlPath {
    /// Build from flat knot data. Times must start at 0, be nondecreasing,
    /// and repeat at most twice (a jump); segments between jumps have
    /// positive length.
    pub fn from_knots(dim: usize, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPath("control dimension must be positive".into()));
        }
        if values.len() != dim * times.len() {
            return Err(Error::Dimension { expected: dim * times.len(), got: values.len() });
        }
        if times.len() < 2 {
            return Err(Error::InvalidPath("need at least two knots".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidPath("path must start at t = 0".into()));
        }
        if values.iter().chain(&times).any(|x| !x.is_finite()) {
            return Err(Error::InvalidPath("non-finite knot".into()));
        }
        for i in 1..times.len() {
            if times[i] < times[i - 1] {
                return Err(Error::InvalidPath(format!("knot times decrease at index {i}")));
            }
            if i >= 2 && times[i] == times[i - 1] && times[i - 1] == times[i - 2] {
                return Err(Error::InvalidPath(format!("consecutive jumps at t = {}", times[i])));
            }
        }
        let horizon = *times.last().unwrap();
        if horizon <= 0.0 {
            return Err(Error::InvalidPath("horizon must be positive".into()));
        }
        let mut cumvar = vec![0.0; times.len()];
        for i in 1..times.len() {
            let d = dist(&values[(i - 1) * dim..i * dim], &values[i * dim..(i + 1) * dim]);
            cumvar[i] = cumvar[i - 1] + d;
        }
        Ok(Self { dim, times, values, cumvar })
    }

    /// Absolutely continuous path through the given samples.
    pub fn from_samples(times: &[f64], samples: &[Vec<f64>]) -> Result<Self> {
        if times.len() != samples.len() || samples.is_empty() {
            return Err(Error::InvalidPath("times and samples differ in length".into()));
        }
        let dim = samples[0].len();
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPath("sample times must be strictly increasing".into()));
        }
        let values = samples.iter().flatten().copied().collect();
        Self::from_knots(dim, times.to_vec(), values)
    }

    pub fn constant(horizon: f64, u0: Vec<f64>) -> Result<Self> {
        let dim = u0.len();
        let values = [u0.clone(), u0].concat();
        Self::from_knots(dim, vec![0.0, horizon], values)
    }

    pub fn builder(u0: Vec<f64>) -> PathBuilder {
        PathBuilder { dim: u0.len(), times: vec![0.0], values: u0, err: None }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }
    pub fn knot_times(&self) -> &[f64] {
        &self.times
    }
    pub fn knot(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
    pub fn knot_count(&self) -> usize {
        self.times.len()
    }
    pub fn initial(&self) -> &[f64] {
        self.knot(0)
    }
    pub fn terminal(&self) -> &[f64] {
        self.knot(self.knot_count() - 1)
    }

    pub fn jumps(&self) -> Vec<Jump> {
        (1..self.times.len())
            .filter(|&i| self.times[i] == self.times[i - 1])
            .map(|i| Jump {
                t: self.times[i],
                left: self.knot(i - 1).to_vec(),
                right: self.knot(i).to_vec(),
            })
            .collect()
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        self.times.windows(2).all(|w| w[1] > w[0])
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let h = self.horizon();
        if !(t >= -TIME_TOL && t <= h + TIME_TOL * h.max(1.0)) {
            return Err(Error::OutOfDomain { t, horizon: h });
        }
        Ok(())
    }

    /// Knot index `i` such that `t` lies in the segment `[t_i, t_{i+1}]`
    /// selected by the right-continuous convention (`u(0)` for `t = 0`).
    fn segment(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        locate(&self.times, t)
    }

    fn eval_segment(&self, i: usize, t: f64, out: &mut [f64]) {
        let (a, b) = (self.times[i], self.times[i + 1]);
        let w = if b > a { ((t - a) / (b - a)).clamp(0.0, 1.0) } else { 1.0 };
        for (k, o) in out.iter_mut().enumerate() {
            let x = self.values[i * self.dim + k];
            let y = self.values[(i + 1) * self.dim + k];
            *o = x + w * (y - x);
        }
    }

    /// `u(t)`, right-continuous at jumps, `u(0) = ū0`.
    pub fn value(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let mut out = vec![0.0; self.dim];
        self.value_into(t, &mut out);
        Ok(out)
    }

    pub(crate) fn value_into(&self, t: f64, out: &mut [f64]) {
        if t <= 0.0 {
            out.copy_from_slice(self.knot(0));
            return;
        }
        let i = self.segment(t);
        if t >= self.times[i + 1] {
            // at or past the right end of the last segment
            let j = self.times.partition_point(|&p| p <= t) - 1;
            out.copy_from_slice(self.knot(j));
            return;
        }
        self.eval_segment(i, t, out);
    }

    /// Left limit `u(t−)` (equal to `u(0)` at the origin).
    pub fn left_limit(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        if t <= 0.0 {
            return Ok(self.knot(0).to_vec());
        }
        let i = self.times.partition_point(|&p| p < t);
        let mut out = vec![0.0; self.dim];
        self.eval_segment(i - 1, t, &mut out);
        Ok(out)
    }

    /// Linear piece and slope on the segment whose interior contains `hint`.
    pub(crate) fn segment_containing(&self, hint: f64) -> usize {
        let i = locate(&self.times, hint);
        // skip zero-length jump segments
        if self.times[i + 1] == self.times[i] && i + 2 < self.times.len() {
            i + 1
        } else {
            i
        }
    }

    pub(crate) fn eval_on_segment(&self, seg: usize, t: f64, value: &mut [f64], slope: &mut [f64]) {
        let (a, b) = (self.times[seg], self.times[seg + 1]);
        let len = b - a;
        for k in 0..self.dim {
            let x = self.values[seg * self.dim + k];
            let y = self.values[(seg + 1) * self.dim + k];
            let s = if len > 0.0 { (y - x) / len } else { 0.0 };
            slope[k] = s;
            value[k] = x + s * (t - a);
        }
    }

    /// `Var_{[0,t]}(u)`, exact on the polyline; includes a jump at `t`
    /// itself for `t > 0`.
    pub fn variation(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.variation_unchecked(t))
    }

    pub(crate) fn variation_unchecked(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let j = self.times.partition_point(|&p| p <= t);
        if j >= self.times.len() {
            return *self.cumvar.last().unwrap();
        }
        let i = j - 1;
        let (a, b) = (self.times[i], self.times[i + 1]);
        let w = (t - a) / (b - a);
        self.cumvar[i] + w * (self.cumvar[i + 1] - self.cumvar[i])
    }

    pub fn total_variation(&self) -> f64 {
        *self.cumvar.last().unwrap()
    }

    /// Every knot value lies in `set`.
    pub fn check_in(&self, set: &ControlSet) -> Result<()> {
        for i in 0..self.knot_count() {
            if !set.contains(self.knot(i)) {
                return Err(Error::NotInSet { point: self.knot(i).to_vec() });
            }
        }
        Ok(())
    }

    /// The path restricted to `[0, tau]`.
    pub fn truncate(&self, tau: f64) -> Result<Self> {
        self.check_time(tau)?;
        if tau <= 0.0 {
            return Err(Error::InvalidPath("cannot truncate to an empty interval".into()));
        }
        let j = self.times.partition_point(|&p| p < tau);
        let mut times = self.times[..j].to_vec();
        let mut values = self.values[..j * self.dim].to_vec();
        // include a jump located exactly at tau, keeping the right value
        let mut end = vec![0.0; self.dim];
        self.value_into(tau, &mut end);
        if j < self.times.len() && self.times[j] == tau {
            let k = self.times.partition_point(|&p| p <= tau);
            for idx in j..k {
                times.push(tau);
                values.extend_from_slice(self.knot(idx));
            }
        } else {
            times.push(tau);
            values.extend_from_slice(&end);
        }
        Self::from_knots(self.dim, times, values)
    }

    /// `∫_0^T |a(t) - b(t)| dt` on the merged knot grid.
    pub fn l1_distance(&self, other: &ControlPath) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::Dimension { expected: self.dim, got: other.dim });
        }
        let h = self.horizon();
        if (h - other.horizon()).abs() > TIME_TOL * h.max(1.0) {
            return Err(Error::GridMismatch);
        }
        let pts = merge_points(
            self.times.iter().chain(other.times.iter()).copied().collect(),
            TIME_TOL * h.max(1.0),
        );
        let d = self.dim;
        let (mut va, mut sa, mut vb, mut sb) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        let mut p = vec![0.0; d];
        let mut q = vec![0.0; d];
        let mut total = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            self.eval_on_segment(self.segment_containing(mid), a, &mut va, &mut sa);
            other.eval_on_segment(other.segment_containing(mid), a, &mut vb, &mut sb);
            for k in 0..d {
                p[k] = va[k] - vb[k];
                q[k] = sa[k] - sb[k];
            }
            total += integrate_linear_norm(a, b, &p, &q);
        }
        Ok(total)
    }

    pub fn to_json(&self) -> ControlPathJson {
        let mut pieces = Vec::new();
        let mut samples: Vec<Vec<f64>> = Vec::new();
        for i in 0..self.knot_count() {
            let t = self.times[i];
            if i > 0 && t == self.times[i - 1] {
                if samples.len() > 1 {
                    pieces.push(Piece::Ac { samples: std::mem::take(&mut samples) });
                }
                samples.clear();
                pieces.push(Piece::Jump { t, left: self.knot(i - 1).to_vec(), right: self.knot(i).to_vec() });
            }
            let mut row = vec![t];
            row.extend_from_slice(self.knot(i));
            samples.push(row);
        }
        if samples.len() > 1 {
            pieces.push(Piece::Ac { samples });
        }
        ControlPathJson { horizon: self.horizon(), pieces }
    }

    pub fn from_json(doc: &ControlPathJson) -> Result<Self> {
        let mut times: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut dim: Option<usize> = None;
        let mut check_dim = |d: usize| -> Result<()> {
            match dim {
                None => {
                    dim = Some(d);
                    Ok(())
                }
                Some(e) if e == d => Ok(()),
                Some(e) => Err(Error::Dimension { expected: e, got: d }),
            }
        };
        let close = |a: &[f64], b: &[f64]| dist(a, b) <= 1e-9;
        for piece in &doc.pieces {
            match piece {
                Piece::Ac { samples } => {
                    if samples.len() < 2 {
                        return Err(Error::InvalidPath("ac piece needs at least two samples".into()));
                    }
                    for (j, row) in samples.iter().enumerate() {
                        if row.len() < 2 {
                            return Err(Error::InvalidPath("ac sample needs a time and a value".into()));
                        }
                        check_dim(row.len() - 1)?;
                        let (t, u) = (row[0], &row[1..]);
                        if j == 0 && !times.is_empty() {
                            let n = times.len();
                            let d = u.len();
                            if t != times[n - 1] || !close(u, &values[(n - 1) * d..]) {
                                return Err(Error::InvalidPath(format!(
                                    "ac piece starting at t = {t} does not continue the path"
                                )));
                            }
                            continue;
                        }
                        times.push(t);
                        values.extend_from_slice(u);
                    }
                }
                Piece::Jump { t, left, right } => {
                    check_dim(left.len())?;
                    check_dim(right.len())?;
                    if times.is_empty() {
                        if *t != 0.0 {
                            return Err(Error::InvalidPath("path must start at t = 0".into()));
                        }
                        times.push(0.0);
                        values.extend_from_slice(left);
                    } else {
                        let n = times.len();
                        let d = left.len();
                        if *t != times[n - 1] || !close(left, &values[(n - 1) * d..]) {
                            return Err(Error::InvalidPath(format!(
                                "jump at t = {t} does not match the adjacent value"
                            )));
                        }
                    }
                    times.push(*t);
                    values.extend_from_slice(right);
                }
            }
        }
        let path = Self::from_knots(dim.unwrap_or(0), times, values)?;
        if (path.horizon() - doc.horizon).abs() > 1e-12 * doc.horizon.max(1.0) {
            return Err(Error::InvalidPath("pieces do not cover [0, horizon]".into()));
        }
        Ok(path)
    }
}

/// Incremental construction of a [`ControlPath`].
#[derive(Debug, Clone)]
pub struct PathBuilder {
    dim: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    err: Option<Error>,
}

impl PathBuilder {
    fn current(&self) -> (f64, Vec<f64>) {
        let n = self.times.len();
        (self.times[n - 1], self.values[(n - 1) * self.dim..].to_vec())
    }

    pub fn line_to(mut self, t: f64, u: Vec<f64>) -> Self {
        let (t0, _) = self.current();
        if self.err.is_none() {
            if u.len() != self.dim {
                self.err = Some(Error::Dimension { expected: self.dim, got: u.len() });
            } else if t <= t0 {
                self.err = Some(Error::InvalidPath(format!("segment end {t} not after {t0}")));
            }
        }
        self.times.push(t);
        self.values.extend(u);
        self
    }

    pub fn hold_until(self, t: f64) -> Self {
        let (_, u) = self.current();
        self.line_to(t, u)
    }

    pub fn jump_to(mut self, u: Vec<f64>) -> Self {
        let (t0, _) = self.current();
        if self.err.is_none() && u.len() != self.dim {
            self.err = Some(Error::Dimension { expected: self.dim, got: u.len() });
        }
        self.times.push(t0);
        self.values.extend(u);
        self
    }

    pub fn build(self) -> Result<ControlPath> {
        if let Some(e) = self.err {
            return Err(e);
        }
        ControlPath::from_knots(self.dim, self.times, self.values)
    }
}

/// JSON form `{horizon, pieces: [{type: "ac", samples: [[t, u…]]} | {type: "jump", t, left, right}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPathJson {
    pub horizon: f64,
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Piece {
    Ac { samples: Vec<Vec<f64>> },
    Jump { t: f64, left: Vec<f64>, right: Vec<f64> },
}

/// Piecewise-constant `v` on a grid `0 = b_0 < … < b_N = T`; cell `i` is
/// `[b_i, b_{i+1})`, the last cell closed at `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinaryControl {
    dim: usize,
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl OrdinaryControl {
    pub fn new(dim: usize, breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || breaks[0] != 0.0 {
            return Err(Error::Config("ordinary control grid must start at 0 with one cell".into()));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("ordinary control grid must be strictly increasing".into()));
        }
        if values.len() != dim * (breaks.len() - 1) {
            return Err(Error::Dimension { expected: dim * (breaks.len() - 1), got: values.len() });
        }
        Ok(Self { dim, breaks, values })
    }

    pub fn constant(horizon: f64, v: Vec<f64>) -> Result<Self> {
        Self::new(v.len(), vec![0.0, horizon], v)
    }

    pub fn zero(horizon: f64, dim: usize) -> Result<Self> {
        Self::new(dim, vec![0.0, horizon], vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn horizon(&self) -> f64 {
        *self.breaks.last().unwrap()
    }
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }
    pub fn cells(&self) -> usize {
        self.breaks.len() - 1
    }
    pub fn cell(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn cell_index(&self, t: f64) -> usize {
        locate(&self.breaks, t)
    }

    /// `v(t)`, right-continuous.
    pub fn value(&self, t: f64) -> Result<&[f64]> {
        let h = self.horizon();
        if !(t >= -TIME_TOL && t <= h + TIME_TOL * h.max(1.0)) {
            return Err(Error::OutOfDomain { t, horizon: h });
        }
        Ok(self.cell(self.cell_index(t)))
    }

    /// Components `range` of every cell.
    pub fn components(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.dim {
            return Err(Error::Dimension { expected: self.dim, got: range.end });
        }
        let d = range.len();
        let values = (0..self.cells()).flat_map(|i| self.cell(i)[range.clone()].to_vec()).collect();
        if d == 0 {
            return Self::new(0, self.breaks.clone(), Vec::new());
        }
        Self::new(d, self.breaks.clone(), values)
    }

    pub fn check_in(&self, set: &ControlSet) -> Result<()> {
        for i in 0..self.cells() {
            if !set.contains(self.cell(i)) {
                return Err(Error::NotInSet { point: self.cell(i).to_vec() });
            }
        }
        Ok(())
    }

    /// `∫ f(|a(t) - b(t)|) dt`, exact for piecewise-constant inputs.
    pub fn integrate_difference(&self, other: &OrdinaryControl, f: impl Fn(f64) -> f64) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::Dimension { expected: self.dim, got: other.dim });
        }
        let h = self.horizon();
        if (h - other.horizon()).abs() > TIME_TOL * h.max(1.0) {
            return Err(Error::GridMismatch);
        }
        let pts = merge_points(
            self.breaks.iter().chain(other.breaks.iter()).copied().collect(),
            TIME_TOL * h.max(1.0),
        );
        Ok(pts
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let d = dist(self.cell(self.cell_index(mid)), other.cell(other.cell_index(mid)));
                f(d) * (w[1] - w[0])
            })
            .sum())
    }

    pub fn l1_distance(&self, other: &OrdinaryControl) -> Result<f64> {
        self.integrate_difference(other, |d| d)
    }

    /// `∫_0^T |v(t)| dt`.
    pub fn l1_norm(&self) -> f64 {
        (0..self.cells())
            .map(|i| crate::num::norm(self.cell(i)) * (self.breaks[i + 1] - self.breaks[i]))
            .sum()
    }

    pub fn to_json(&self) -> OrdinaryControlJson {
        OrdinaryControlJson {
            horizon: self.horizon(),
            breaks: self.breaks.clone(),
            values: (0..self.cells()).map(|i| self.cell(i).to_vec()).collect(),
        }
    }

    pub fn from_json(doc: &OrdinaryControlJson) -> Result<Self> {
        let dim = doc.values.first().map_or(0, Vec::len);
        if doc.values.iter().any(|v| v.len() != dim) {
            return Err(Error::Config("ordinary control cells differ in dimension".into()));
        }
        let c = Self::new(dim, doc.breaks.clone(), doc.values.iter().flatten().copied().collect())?;
        if (c.horizon() - doc.horizon).abs() > 1e-12 * doc.horizon.max(1.0) {
            return Err(Error::Config("ordinary control grid does not end at the horizon".into()));
        }
        Ok(c)
    }
}

/// JSON form `{horizon, breaks: [0, …, T], values: [[v…] per cell]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinaryControlJson {
    pub horizon: f64,
    pub breaks: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_jump() -> ControlPath {
        ControlPath::builder(vec![0.0]).hold_until(0.5).jump_to(vec![1.0]).hold_until(1.0).build().unwrap()
    }

    #[test]
    fn constant_path_has_no_variation() {
        let u = ControlPath::constant(2.0, vec![0.3, -0.1]).unwrap();
        for t in [0.0, 0.7, 2.0] {
            assert_eq!(u.variation(t).unwrap(), 0.0);
        }
    }

    #[test]
    fn monotone_path_variation() {
        let u = ControlPath::from_samples(&[0.0, 1.0], &[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(u.variation(1.0).unwrap(), 1.0);
        assert_eq!(u.variation(0.25).unwrap(), 0.25);
    }

    #[test]
    fn variation_out_of_domain() {
        let u = ControlPath::constant(1.0, vec![0.0]).unwrap();
        assert!(matches!(u.variation(1.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(u.variation(-0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn right_continuous_jump() {
        let u = unit_jump();
        assert_eq!(u.value(0.5).unwrap(), vec![1.0]);
        assert_eq!(u.left_limit(0.5).unwrap(), vec![0.0]);
        assert_eq!(u.value(0.4999).unwrap(), vec![0.0]);
        assert_eq!(u.variation(0.5).unwrap(), 1.0);
        assert_eq!(u.variation(0.49).unwrap(), 0.0);
        assert_eq!(u.jumps().len(), 1);
        assert!(!u.is_absolutely_continuous());
    }

    #[test]
    fn jump_at_origin_keeps_initial_value() {
        let u = ControlPath::builder(vec![0.0]).jump_to(vec![2.0]).hold_until(1.0).build().unwrap();
        assert_eq!(u.value(0.0).unwrap(), vec![0.0]);
        assert_eq!(u.value(1e-9).unwrap(), vec![2.0]);
        assert_eq!(u.variation(0.0).unwrap(), 0.0);
        assert_eq!(u.variation(0.5).unwrap(), 2.0);
    }

    #[test]
    fn double_jump_rejected() {
        let r = ControlPath::builder(vec![0.0]).hold_until(0.5).jump_to(vec![1.0]).jump_to(vec![2.0]).build();
        assert!(r.is_err());
    }

    #[test]
    fn json_round_trip_with_jumps() {
        let u = ControlPath::builder(vec![0.0, 0.0])
            .line_to(0.3, vec![0.2, 0.1])
            .jump_to(vec![1.0, 1.0])
            .hold_until(0.7)
            .jump_to(vec![0.5, 1.0])
            .line_to(1.0, vec![0.5, 0.5])
            .build()
            .unwrap();
        let doc = u.to_json();
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains("\"type\":\"jump\""));
        let back = ControlPath::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn json_rejects_mismatched_jump() {
        let doc = ControlPathJson {
            horizon: 1.0,
            pieces: vec![
                Piece::Ac { samples: vec![vec![0.0, 0.0], vec![0.5, 0.0]] },
                Piece::Jump { t: 0.5, left: vec![0.3], right: vec![1.0] },
                Piece::Ac { samples: vec![vec![0.5, 1.0], vec![1.0, 1.0]] },
            ],
        };
        assert!(ControlPath::from_json(&doc).is_err());
    }

    #[test]
    fn l1_distance_of_jump_paths() {
        let a = unit_jump();
        let b = ControlPath::constant(1.0, vec![0.0]).unwrap();
        assert!((a.l1_distance(&b).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn truncate_keeps_prefix() {
        let u = ControlPath::from_samples(&[0.0, 1.0, 2.0], &[vec![0.0], vec![1.0], vec![0.0]]).unwrap();
        let v = u.truncate(1.5).unwrap();
        assert_eq!(v.horizon(), 1.5);
        assert_eq!(v.terminal(), &[0.5]);
        assert_eq!(v.total_variation(), 1.5);
    }

    #[test]
    fn ordinary_control_l1() {
        let a = OrdinaryControl::new(1, vec![0.0, 0.5, 1.0], vec![1.0, 0.0]).unwrap();
        let b = OrdinaryControl::zero(1.0, 1).unwrap();
        assert_eq!(a.l1_distance(&b).unwrap(), 0.5);
        assert_eq!(a.value(0.5).unwrap(), &[0.0]);
        assert_eq!(a.value(1.0).unwrap(), &[0.0]);
    }

    fn arb_path() -> impl Strategy<Value = ControlPath> {
        prop::collection::vec((0.01f64..1.0, -1.0f64..1.0, prop::bool::weighted(0.2), -1.0f64..1.0), 1..30)
            .prop_map(|steps| {
                let mut b = ControlPath::builder(vec![0.0]);
                let mut t = 0.0;
                for (dt, u, jump, ju) in steps {
                    t += dt;
                    b = b.line_to(t, vec![u]);
                    if jump {
                        b = b.jump_to(vec![ju]).line_to(t + 0.01, vec![ju]);
                        t += 0.01;
                    }
                }
                b.build().unwrap()
            })
    }

    proptest! {
        #[test]
        fn variation_is_additive_and_monotone(u in arb_path(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let h = u.horizon();
            let (t1, t2) = if a < b { (a * h, b * h) } else { (b * h, a * h) };
            let v1 = u.variation(t1).unwrap();
            let v2 = u.variation(t2).unwrap();
            prop_assert!(v2 >= v1 - 1e-12);
            // Var over [t1, t2] computed independently from the knots
            let mut mid = 0.0;
            let mut prev = u.value(t1).unwrap();
            for i in 0..u.knot_count() {
                let t = u.knot_times()[i];
                if t > t1 && t <= t2 {
                    mid += dist(&prev, u.knot(i));
                    prev = u.knot(i).to_vec();
                }
            }
            mid += dist(&prev, &u.value(t2).unwrap());
            prop_assert!((v1 + mid - v2).abs() < 1e-9);
        }
    }
}
