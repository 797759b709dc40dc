//! Graph completions of BV controls.
//!
//! A completion replaces the graph `{(t, u(t))}` of a control with jumps by a
//! Lipschitz curve `s ↦ (φ0(s), φ(s))` on `[0, S]` that follows the graph at
//! unit combined speed `φ0' + |φ'| = 1` and, at each jump time, freezes
//! `φ0` while `φ` travels along a bridge between the one-sided limits. The
//! ordinary control rides along as `ψ(s)`. A [`Clock`] maps real time back
//! onto the curve.

use serde::{Deserialize, Serialize};

use crate::bv::{ControlPath, OrdinaryControl};
use crate::clock::Clock;
use crate::control_set::ControlSet;
use crate::error::{Error, Result};
use crate::num::{dist, lerp_into, locate, merge_points};
use crate::trajectory::{ParamPath, Trajectory};

/// Tolerance on `|φ0' + |φ'| - 1|` for the feasible flag.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// A polyline bridge between two control values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bridge {
    points: Vec<Vec<f64>>,
}

impl Bridge {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidPath("a bridge needs at least two points".into()));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::Dimension { expected: d, got: 0 });
        }
        Ok(Self { points })
    }

    pub fn straight(u1: &[f64], u2: &[f64]) -> Self {
        Self { points: vec![u1.to_vec(), u2.to_vec()] }
    }

    /// Move the first coordinate, then the remaining ones.
    pub fn two_leg(u1: &[f64], u2: &[f64]) -> Self {
        let mut corner = u1.to_vec();
        corner[0] = u2[0];
        Self { points: vec![u1.to_vec(), corner, u2.to_vec()] }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
    pub fn start(&self) -> &[f64] {
        &self.points[0]
    }
    pub fn end(&self) -> &[f64] {
        self.points.last().unwrap()
    }

    /// Polyline length.
    pub fn variation(&self) -> f64 {
        self.points.windows(2).map(|w| dist(&w[0], &w[1])).sum()
    }

    /// Point at fraction `w ∈ [0, 1]` of the arc length.
    pub fn at(&self, w: f64) -> Vec<f64> {
        let total = self.variation();
        let mut out = self.start().to_vec();
        if total == 0.0 {
            return out;
        }
        let mut remaining = w.clamp(0.0, 1.0) * total;
        for seg in self.points.windows(2) {
            let len = dist(&seg[0], &seg[1]);
            if remaining <= len && len > 0.0 {
                lerp_into(&seg[0], &seg[1], remaining / len, &mut out);
                return out;
            }
            remaining -= len;
        }
        self.end().to_vec()
    }

    /// Sampled check that the bridge stays inside `set`.
    pub fn check_in(&self, set: &ControlSet) -> Result<()> {
        let mut p = vec![0.0; self.start().len()];
        for seg in self.points.windows(2) {
            for i in 0..=32 {
                lerp_into(&seg[0], &seg[1], i as f64 / 32.0, &mut p);
                if !set.contains(&p) {
                    return Err(Error::NotInSet { point: p });
                }
            }
        }
        Ok(())
    }
}

/// Bridge from `u1` to `u2` inside `set` with variation at most `C |u1 - u2|`:
/// the straight segment when both points share a convex part, otherwise the
/// two legs through the star center.
pub fn whitney_bridge(u1: &[f64], u2: &[f64], set: &ControlSet) -> Result<Bridge> {
    for p in [u1, u2] {
        if !set.contains(p) {
            return Err(Error::NotInSet { point: p.to_vec() });
        }
    }
    let bridge = if set.common_part(u1, u2) {
        Bridge::straight(u1, u2)
    } else {
        let c = set.star_center().expect("non-convex sets are star unions");
        Bridge { points: vec![u1.to_vec(), c.to_vec(), u2.to_vec()] }
    };
    let variation = bridge.variation();
    let bound = set.whitney * dist(u1, u2);
    if variation > bound * (1.0 + 1e-12) {
        return Err(Error::WhitneyViolation { variation, bound });
    }
    Ok(bridge)
}

/// How to fill a jump.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BridgeChoice {
    /// [`whitney_bridge`] in the control set.
    #[default]
    Whitney,
    Straight,
    TwoLeg,
    Custom(Bridge),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionOptions {
    /// One entry per jump; missing entries use [`BridgeChoice::Whitney`].
    pub bridges: Vec<BridgeChoice>,
    /// Constant `ψ` on each jump fiber; `None` freezes `v(t̄)`.
    pub fiber_controls: Vec<Option<Vec<f64>>>,
    /// Target number of parameter cells.
    pub cells: usize,
    /// Minimum number of cells on each fiber.
    pub min_fiber_cells: usize,
}

impl Default for CompletionOptions {
    fn default() -> Self {
        Self { bridges: Vec::new(), fiber_controls: Vec::new(), cells: 4096, min_fiber_cells: 64 }
    }
}

impl CompletionOptions {
    pub fn with_bridges(mut self, choice: BridgeChoice, jumps: usize) -> Self {
        self.bridges = vec![choice; jumps];
        self
    }
}

/// A parametrized graph `(φ0, φ, ψ)` on `[0, S]`: `φ0` and `φ` piecewise
/// linear on the parameter nodes, `ψ = (ψ1, ψ2)` constant on each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeControl {
    u_dim: usize,
    v_dim: usize,
    params: Vec<f64>,
    clock_times: Vec<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
    feasible: bool,
}

impl SpaceTimeControl {
    pub fn new(
        u_dim: usize,
        v_dim: usize,
        params: Vec<f64>,
        clock_times: Vec<f64>,
        phi: Vec<f64>,
        psi: Vec<f64>,
    ) -> Result<Self> {
        let n = params.len();
        if n < 2 || clock_times.len() != n || phi.len() != n * u_dim || psi.len() != (n - 1) * v_dim {
            return Err(Error::InvalidSpaceTime("inconsistent sample counts".into()));
        }
        if params[0] != 0.0 || clock_times[0] != 0.0 {
            return Err(Error::InvalidSpaceTime("must start at s = 0 with φ0(0) = 0".into()));
        }
        let mut stc = Self { u_dim, v_dim, params, clock_times, phi, psi, feasible: false };
        for j in 0..n - 1 {
            let ds = stc.params[j + 1] - stc.params[j];
            if ds <= 0.0 {
                return Err(Error::InvalidSpaceTime(format!("parameter nodes not increasing at {j}")));
            }
            let dt = stc.clock_times[j + 1] - stc.clock_times[j];
            if dt < 0.0 {
                return Err(Error::InvalidSpaceTime(format!("φ0 decreases on cell {j}")));
            }
            let speed = (dt + dist(stc.phi_node(j), stc.phi_node(j + 1))) / ds;
            if speed > 1.0 + 1e-9 {
                return Err(Error::InvalidSpaceTime(format!("speed {speed} exceeds 1 on cell {j}")));
            }
        }
        stc.feasible = stc.feasibility_residual() <= FEASIBILITY_TOL;
        Ok(stc)
    }

    pub fn u_dim(&self) -> usize {
        self.u_dim
    }
    pub fn v_dim(&self) -> usize {
        self.v_dim
    }
    /// Parameter horizon `S`.
    pub fn horizon(&self) -> f64 {
        *self.params.last().unwrap()
    }
    /// Time horizon `T = φ0(S)`.
    pub fn time_horizon(&self) -> f64 {
        *self.clock_times.last().unwrap()
    }
    pub fn is_feasible(&self) -> bool {
        self.feasible
    }
    pub fn params(&self) -> &[f64] {
        &self.params
    }
    pub fn clock_times(&self) -> &[f64] {
        &self.clock_times
    }
    pub fn len(&self) -> usize {
        self.params.len()
    }
    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }
    pub fn phi_node(&self, j: usize) -> &[f64] {
        &self.phi[j * self.u_dim..(j + 1) * self.u_dim]
    }
    pub fn psi_cell(&self, j: usize) -> &[f64] {
        &self.psi[j * self.v_dim..(j + 1) * self.v_dim]
    }

    pub(crate) fn cell_of(&self, s: f64) -> usize {
        locate(&self.params, s)
    }

    /// `(φ0(s), φ(s))`.
    pub fn graph_at(&self, s: f64) -> (f64, Vec<f64>) {
        let j = self.cell_of(s);
        let w = ((s - self.params[j]) / (self.params[j + 1] - self.params[j])).clamp(0.0, 1.0);
        let t = self.clock_times[j] + w * (self.clock_times[j + 1] - self.clock_times[j]);
        let mut u = vec![0.0; self.u_dim];
        lerp_into(self.phi_node(j), self.phi_node(j + 1), w, &mut u);
        (t, u)
    }

    /// `ψ(s)` on the cell containing `s`.
    pub fn psi_at(&self, s: f64) -> &[f64] {
        self.psi_cell(self.cell_of(s))
    }

    /// `ψ` as a piecewise-constant control on the parameter interval `[0, S]`.
    pub fn psi_control(&self) -> Result<OrdinaryControl> {
        OrdinaryControl::new(self.v_dim, self.params.clone(), self.psi.clone())
    }

    /// Per-cell speed `φ0' + |φ'|`.
    pub fn speeds(&self) -> Vec<f64> {
        (0..self.len() - 1).map(|j| self.cell_speed(j)).collect()
    }

    fn cell_speed(&self, j: usize) -> f64 {
        let ds = self.params[j + 1] - self.params[j];
        let dt = self.clock_times[j + 1] - self.clock_times[j];
        (dt + dist(self.phi_node(j), self.phi_node(j + 1))) / ds
    }

    /// `max_j |φ0' + |φ'| - 1|` over cells.
    pub fn feasibility_residual(&self) -> f64 {
        (0..self.len() - 1).map(|j| (self.cell_speed(j) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `Var_{[0,S]}(φ)`.
    pub fn phi_variation(&self) -> f64 {
        (0..self.len() - 1).map(|j| dist(self.phi_node(j), self.phi_node(j + 1))).sum()
    }

    /// Insert nodes at the given parameters; the represented maps are unchanged.
    pub fn refine_at(&self, points: &[f64]) -> Result<Self> {
        let s_end = self.horizon();
        let tol = 1e-13 * s_end.max(1.0);
        let mut all: Vec<f64> = self.params.clone();
        all.extend(points.iter().copied().filter(|s| *s > 0.0 && *s < s_end));
        let merged = merge_points(all, tol);
        // keep existing nodes exactly
        let mut nodes = Vec::with_capacity(merged.len());
        let mut k = 0;
        for s in merged {
            while k < self.params.len() && self.params[k] < s - tol {
                k += 1;
            }
            if k < self.params.len() && (self.params[k] - s).abs() <= tol {
                nodes.push(self.params[k]);
            } else {
                nodes.push(s);
            }
        }
        nodes.dedup();
        self.resample(nodes)
    }

    /// Split cells so no cell is longer than `max_width`.
    pub fn subdivide(&self, max_width: f64) -> Result<Self> {
        let mut nodes = vec![0.0];
        for j in 0..self.len() - 1 {
            let (a, b) = (self.params[j], self.params[j + 1]);
            let pieces = ((b - a) / max_width).ceil().max(1.0) as usize;
            for i in 1..pieces {
                nodes.push(a + (b - a) * i as f64 / pieces as f64);
            }
            nodes.push(b);
        }
        self.resample(nodes)
    }

    fn resample(&self, nodes: Vec<f64>) -> Result<Self> {
        let mut clock_times = Vec::with_capacity(nodes.len());
        let mut phi = Vec::with_capacity(nodes.len() * self.u_dim);
        let mut psi = Vec::with_capacity((nodes.len() - 1) * self.v_dim);
        let mut j = 0;
        for (i, &s) in nodes.iter().enumerate() {
            while j + 2 < self.params.len() && self.params[j + 1] <= s {
                j += 1;
            }
            let (a, b) = (self.params[j], self.params[j + 1]);
            let w = if s == b { 1.0 } else { ((s - a) / (b - a)).clamp(0.0, 1.0) };
            clock_times.push(self.clock_times[j] + w * (self.clock_times[j + 1] - self.clock_times[j]));
            let mut p = vec![0.0; self.u_dim];
            lerp_into(self.phi_node(j), self.phi_node(j + 1), w, &mut p);
            if s == a {
                p.copy_from_slice(self.phi_node(j));
            }
            phi.extend(p);
            if i + 1 < nodes.len() {
                let mid = 0.5 * (s + nodes[i + 1]);
                psi.extend_from_slice(self.psi_at(mid));
            }
        }
        let mut out = Self::new(self.u_dim, self.v_dim, nodes, clock_times, phi, psi)?;
        out.feasible = out.feasibility_residual() <= FEASIBILITY_TOL;
        Ok(out)
    }

    /// `(φ0, φ, ψ) ∘ r` for a nondecreasing, continuous piecewise-linear map
    /// `r : [0, S'] → [0, S]` given by matching node lists (`r(new_i) = old_i`),
    /// with `r(0) = 0` and `r(S') = S`. Where `r` is flat the graph is
    /// stationary (a dead arc).
    pub fn reparametrize(&self, new_nodes: &[f64], old_nodes: &[f64]) -> Result<Self> {
        if new_nodes.len() != old_nodes.len() || new_nodes.len() < 2 {
            return Err(Error::InvalidSpaceTime("reparametrization needs matching node lists".into()));
        }
        if old_nodes[0] != 0.0 || (old_nodes.last().unwrap() - self.horizon()).abs() > 1e-12 * self.horizon().max(1.0) {
            return Err(Error::InvalidSpaceTime("reparametrization must map onto [0, S]".into()));
        }
        if new_nodes.windows(2).any(|w| w[1] <= w[0]) || old_nodes.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSpaceTime("reparametrization must be nondecreasing".into()));
        }
        let r = |x: f64| -> f64 {
            let i = locate(new_nodes, x);
            let w = ((x - new_nodes[i]) / (new_nodes[i + 1] - new_nodes[i])).clamp(0.0, 1.0);
            old_nodes[i] + w * (old_nodes[i + 1] - old_nodes[i])
        };
        // preimages of the graph nodes keep the composition piecewise linear
        let mut pts = new_nodes.to_vec();
        for &s in &self.params {
            let i = old_nodes.partition_point(|&p| p < s).saturating_sub(1).min(old_nodes.len() - 2);
            let (a, b) = (old_nodes[i], old_nodes[i + 1]);
            if b > a && s >= a && s <= b {
                pts.push(new_nodes[i] + (s - a) / (b - a) * (new_nodes[i + 1] - new_nodes[i]));
            }
        }
        let end = *new_nodes.last().unwrap();
        let nodes = merge_points(pts, 1e-13 * end.max(1.0));
        let mut clock_times = Vec::with_capacity(nodes.len());
        let mut phi = Vec::with_capacity(nodes.len() * self.u_dim);
        let mut psi = Vec::with_capacity((nodes.len() - 1) * self.v_dim);
        for (i, &x) in nodes.iter().enumerate() {
            let (t, p) = self.graph_at(r(x));
            clock_times.push(t);
            phi.extend(p);
            if i + 1 < nodes.len() {
                psi.extend_from_slice(self.psi_at(r(0.5 * (x + nodes[i + 1]))));
            }
        }
        Self::new(self.u_dim, self.v_dim, nodes, clock_times, phi, psi)
    }

    /// JSON form `{S, samples: [[s, t, u…, v…]]}`; the last sample repeats
    /// the last cell's `v`.
    pub fn to_json(&self) -> SpaceTimeJson {
        let samples = (0..self.len())
            .map(|j| {
                let mut row = vec![self.params[j], self.clock_times[j]];
                row.extend_from_slice(self.phi_node(j));
                row.extend_from_slice(self.psi_cell(j.min(self.len() - 2)));
                row
            })
            .collect();
        SpaceTimeJson { s: self.horizon(), u_dim: self.u_dim, samples }
    }

    pub fn from_json(doc: &SpaceTimeJson) -> Result<Self> {
        let n = doc.samples.len();
        if n < 2 {
            return Err(Error::InvalidSpaceTime("need at least two samples".into()));
        }
        let width = doc.samples[0].len();
        if width < 2 + doc.u_dim || doc.samples.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidSpaceTime("inconsistent sample width".into()));
        }
        let v_dim = width - 2 - doc.u_dim;
        let params = doc.samples.iter().map(|r| r[0]).collect();
        let clock_times = doc.samples.iter().map(|r| r[1]).collect();
        let phi = doc.samples.iter().flat_map(|r| r[2..2 + doc.u_dim].to_vec()).collect();
        let psi = doc.samples[..n - 1].iter().flat_map(|r| r[2 + doc.u_dim..].to_vec()).collect();
        Self::new(doc.u_dim, v_dim, params, clock_times, phi, psi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeJson {
    #[serde(rename = "S")]
    pub s: f64,
    pub u_dim: usize,
    pub samples: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, PartialEq)]
enum CellKind {
    Regular,
    Fiber(usize),
}

/// Complete the graph of `u` (with ordinary control `v`) into a feasible
/// space-time control and its right-end clock.
pub fn complete_graph(
    u: &ControlPath,
    v: &OrdinaryControl,
    set: &ControlSet,
    opts: &CompletionOptions,
) -> Result<(SpaceTimeControl, Clock)> {
    u.check_in(set)?;
    let jumps = u.jumps();
    let mut bridges = Vec::with_capacity(jumps.len());
    for (j, jump) in jumps.iter().enumerate() {
        let choice = opts.bridges.get(j).cloned().unwrap_or_default();
        let b = match choice {
            BridgeChoice::Whitney => whitney_bridge(&jump.left, &jump.right, set)?,
            BridgeChoice::Straight => Bridge::straight(&jump.left, &jump.right),
            BridgeChoice::TwoLeg => Bridge::two_leg(&jump.left, &jump.right),
            BridgeChoice::Custom(b) => b,
        };
        if dist(b.start(), &jump.left) > 1e-9 || dist(b.end(), &jump.right) > 1e-9 {
            return Err(Error::BridgeMismatch { t: jump.t });
        }
        b.check_in(set)?;
        bridges.push(b);
    }
    build_completion(u, v, &bridges, opts)
}

fn build_completion(
    u: &ControlPath,
    v: &OrdinaryControl,
    bridges: &[Bridge],
    opts: &CompletionOptions,
) -> Result<(SpaceTimeControl, Clock)> {
    let horizon = u.horizon();
    if (v.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::Config("u and v have different horizons".into()));
    }
    let d = u.dim();
    let times = u.knot_times();
    let mut params = vec![0.0];
    let mut clock_times = vec![0.0];
    let mut phi = u.initial().to_vec();
    let mut kinds: Vec<CellKind> = Vec::new();
    let mut ck_t = vec![0.0];
    let mut ck_s = vec![0.0];
    let mut s = 0.0;
    let mut jump_idx = 0;
    let mut fiber_width = vec![0.0; bridges.len()];
    for i in 1..u.knot_count() {
        if times[i] > times[i - 1] {
            s += (times[i] - times[i - 1]) + dist(u.knot(i - 1), u.knot(i));
            params.push(s);
            clock_times.push(times[i]);
            phi.extend_from_slice(u.knot(i));
            kinds.push(CellKind::Regular);
            ck_t.push(times[i]);
            ck_s.push(s);
        } else {
            let bridge = &bridges[jump_idx];
            let s_left = s;
            for w in bridge.points().windows(2) {
                let len = dist(&w[0], &w[1]);
                if len == 0.0 {
                    continue;
                }
                s += len;
                params.push(s);
                clock_times.push(times[i]);
                phi.extend_from_slice(&w[1]);
                kinds.push(CellKind::Fiber(jump_idx));
            }
            if s > s_left {
                ck_t.push(times[i]);
                ck_s.push(s);
                fiber_width[jump_idx] = s - s_left;
            }
            jump_idx += 1;
        }
    }
    let clock = Clock::new(ck_t, ck_s)?;
    let s_end = s;

    // the coarse nodes plus the images of the v breakpoints, then refinement
    let max_width = s_end / opts.cells.max(1) as f64;
    let mut nodes: Vec<f64> = Vec::new();
    for j in 0..params.len() - 1 {
        let (a, b) = (params[j], params[j + 1]);
        let mut pieces = ((b - a) / max_width).ceil().max(1.0) as usize;
        if let CellKind::Fiber(f) = kinds[j] {
            let share = (b - a) / fiber_width[f];
            pieces = pieces.max((opts.min_fiber_cells as f64 * share).ceil() as usize);
        }
        for i in 0..pieces {
            nodes.push(a + (b - a) * i as f64 / pieces as f64);
        }
    }
    nodes.push(s_end);
    let breaks: Vec<f64> = v.breaks()[1..v.breaks().len() - 1].iter().map(|t| clock.eval(*t)).collect();

    let coarse_psi = vec![0.0; (params.len() - 1) * v.dim()];
    let coarse = SpaceTimeControl {
        u_dim: d,
        v_dim: v.dim(),
        params: params.clone(),
        clock_times,
        phi,
        psi: coarse_psi,
        feasible: false,
    };
    let mut all = nodes.clone();
    all.extend(breaks);
    let mut stc = coarse.resample(nodes)?.refine_at(&all)?;

    // fill ψ cell by cell
    let mut psi = Vec::with_capacity((stc.len() - 1) * v.dim());
    for j in 0..stc.len() - 1 {
        let mid = 0.5 * (stc.params[j] + stc.params[j + 1]);
        let k = locate(&params, mid);
        match kinds[k] {
            CellKind::Fiber(f) => {
                let t = stc.clock_times[j];
                match opts.fiber_controls.get(f).and_then(|o| o.as_ref()) {
                    Some(val) => {
                        if val.len() != v.dim() {
                            return Err(Error::Dimension { expected: v.dim(), got: val.len() });
                        }
                        psi.extend_from_slice(val)
                    }
                    None => psi.extend_from_slice(v.value(t)?),
                }
            }
            CellKind::Regular => {
                let t = 0.5 * (stc.clock_times[j] + stc.clock_times[j + 1]);
                psi.extend_from_slice(v.value(t)?);
            }
        }
    }
    stc.psi = psi;
    stc.feasible = stc.feasibility_residual() <= FEASIBILITY_TOL;
    Ok((stc, clock))
}

/// Arc-length parametrization of an absolutely continuous control together
/// with a trajectory: returns the graph, the clock `σ(t) = t + Var_{[0,t]}(u)`
/// and `ξ = x ∘ φ0` sampled on the parameter nodes.
pub fn arc_length_param(
    u: &ControlPath,
    v: &OrdinaryControl,
    x: &Trajectory,
) -> Result<(SpaceTimeControl, Clock, ParamPath)> {
    if let Some(j) = u.jumps().first() {
        return Err(Error::JumpPresent { t: j.t });
    }
    let (stc, clock) = build_completion(u, v, &[], &CompletionOptions::default())?;
    let images: Vec<f64> = x.times().iter().map(|t| clock.eval(*t)).collect();
    let stc = stc.refine_at(&images)?;
    let mut states = Vec::with_capacity(stc.len() * x.dim());
    for &t in stc.clock_times() {
        states.extend(x.at(t));
    }
    let xi = ParamPath::new(x.dim(), stc.params.clone(), stc.clock_times.clone(), states);
    Ok((stc, clock, xi))
}

/// Monotone reparametrization `η : [0, S] → [0, η(S)]` with its right inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparametrization {
    old: Vec<f64>,
    new: Vec<f64>,
}

impl Reparametrization {
    /// `η(s)`.
    pub fn forward(&self, s: f64) -> f64 {
        let i = locate(&self.old, s);
        let (a, b) = (self.old[i], self.old[i + 1]);
        let w = ((s - a) / (b - a)).clamp(0.0, 1.0);
        self.new[i] + w * (self.new[i + 1] - self.new[i])
    }

    /// Smallest `s` with `η(s) = r`.
    pub fn inverse(&self, r: f64) -> f64 {
        let i = self.new.partition_point(|&p| p < r).saturating_sub(1).min(self.new.len() - 2);
        let (a, b) = (self.new[i], self.new[i + 1]);
        if b == a {
            return self.old[i];
        }
        let w = ((r - a) / (b - a)).clamp(0.0, 1.0);
        self.old[i] + w * (self.old[i + 1] - self.old[i])
    }

    pub fn total(&self) -> f64 {
        *self.new.last().unwrap()
    }
}

/// Rescale to unit speed `φ0' + |φ'| = 1`, cutting out dead arcs where the
/// graph does not move.
pub fn normalize_feasible(stc: &SpaceTimeControl) -> Result<(SpaceTimeControl, Reparametrization)> {
    let n = stc.len();
    let mut eta = Vec::with_capacity(n);
    eta.push(0.0);
    for j in 0..n - 1 {
        let dt = stc.clock_times[j + 1] - stc.clock_times[j];
        let du = dist(stc.phi_node(j), stc.phi_node(j + 1));
        eta.push(eta[j] + dt + du);
    }
    let total = eta[n - 1];
    if total <= 0.0 {
        return Err(Error::Degenerate);
    }
    let mut params = vec![0.0];
    let mut clock_times = vec![stc.clock_times[0]];
    let mut phi = stc.phi_node(0).to_vec();
    let mut psi = Vec::new();
    for j in 0..n - 1 {
        let dt = stc.clock_times[j + 1] - stc.clock_times[j];
        let du = dist(stc.phi_node(j), stc.phi_node(j + 1));
        let len = dt + du;
        if len <= 1e-15 * total {
            continue;
        }
        let r = params.last().unwrap() + len;
        params.push(r);
        clock_times.push(stc.clock_times[j + 1]);
        phi.extend_from_slice(stc.phi_node(j + 1));
        psi.extend_from_slice(stc.psi_cell(j));
    }
    let out = SpaceTimeControl::new(stc.u_dim, stc.v_dim, params, clock_times, phi, psi)?;
    Ok((out, Reparametrization { old: stc.params.clone(), new: eta }))
}

/// `u = φ ∘ σ` and `v = ψ ∘ σ` for a clock compatible with the graph. A
/// skipping clock produces jumps in `u`.
pub fn compose(stc: &SpaceTimeControl, clock: &Clock) -> Result<(ControlPath, OrdinaryControl)> {
    let horizon = clock.horizon();
    if clock.end() > stc.horizon() * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::InvalidClock("clock range exceeds the graph parameter".into()));
    }
    let tol = 1e-13 * horizon.max(1.0);
    let mut pts: Vec<f64> = clock.knot_times().to_vec();
    pts.extend(stc.params.iter().map(|s| clock.preimage(*s)));
    let pts = merge_points(pts, tol);
    let skips = clock.skips();
    let d = stc.u_dim;
    let mut times = Vec::with_capacity(pts.len() + skips.len());
    let mut values = Vec::with_capacity((pts.len() + skips.len()) * d);
    let push = |t: f64, s: f64, times: &mut Vec<f64>, values: &mut Vec<f64>| {
        let (_, p) = stc.graph_at(s.min(stc.horizon()));
        times.push(t);
        values.extend(p);
    };
    let mut k = 0;
    for &t in &pts {
        while k < skips.len() && skips[k].t < t - tol {
            k += 1;
        }
        if k < skips.len() && (skips[k].t - t).abs() <= tol {
            push(skips[k].t, skips[k].s_left, &mut times, &mut values);
            push(skips[k].t, skips[k].s_right, &mut times, &mut values);
        } else {
            push(t, clock.eval(t), &mut times, &mut values);
        }
    }
    let u = ControlPath::from_knots(d, times, values)?;
    let mut vals = Vec::with_capacity((pts.len() - 1) * stc.v_dim);
    for w in pts.windows(2) {
        let s = clock.eval(0.5 * (w[0] + w[1]));
        vals.extend_from_slice(stc.psi_at(s));
    }
    let v = OrdinaryControl::new(stc.v_dim, pts, vals)?;
    Ok((u, v))
}

/// `max_t |(φ0, φ)(σ(t)) - (t, u(t))|` over the grid.
pub fn compatibility_residual(stc: &SpaceTimeControl, clock: &Clock, u: &ControlPath, grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in grid {
        let (t2, p) = stc.graph_at(clock.evaluate(t)?);
        let ut = u.value(t)?;
        let e = ((t2 - t).powi(2) + dist(&p, &ut).powi(2)).sqrt();
        worst = worst.max(e);
    }
    Ok(worst)
}

/// `min_s |(φ0, φ)(s) - (t, u(t))|` over parameter nodes, maximized over the grid.
pub fn graph_cover_residual(stc: &SpaceTimeControl, u: &ControlPath, grid: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in grid {
        let ut = u.value(t)?;
        let best = (0..stc.len())
            .map(|j| {
                let dt = stc.clock_times[j] - t;
                (dt * dt + dist(stc.phi_node(j), &ut).powi(2)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    Ok(worst)
}
