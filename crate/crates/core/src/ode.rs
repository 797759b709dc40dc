//! Fixed-step RK4 for the Carathéodory system
//!
//! ```text
//! x'(t) = g0(x, u, v1) + Σ gi(x, u, v2) u_i'(t)
//! ```
//!
//! and for the space-time system
//!
//! ```text
//! ξ'(s) = g0(ξ, φ, ψ1) φ0'(s) + Σ gi(ξ, φ, ψ2) φ_i'(s).
//! ```
//!
//! Steps are aligned with every breakpoint of the inputs, so `u'`, `v`,
//! `φ'` and `ψ` are smooth inside each step.

use crate::bv::{ControlPath, OrdinaryControl};
use crate::clock::Clock;
use crate::error::{Error, Result};
use crate::fields::VectorFieldSet;
use crate::graph::SpaceTimeControl;
use crate::num::{merge_points, norm};
use crate::trajectory::{find_node, JumpRecord, ParamPath, Trajectory};

/// States beyond this norm abort the integration.
pub const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// RK4 steps per unit of the independent variable (at least one per cell).
    pub steps_per_unit: usize,
    /// Absolute tolerance used by consistency checks.
    pub tolerance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { steps_per_unit: 2048, tolerance: 1e-8 }
    }
}

impl IntegratorConfig {
    pub fn with_steps(steps_per_unit: usize) -> Self {
        Self { steps_per_unit, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.steps_per_unit == 0 {
            return Err(Error::Config("steps per unit must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// An absolutely continuous input `u` with known derivative.
pub trait ControlInput: Sync {
    fn dim(&self) -> usize;
    fn horizon(&self) -> f64;
    /// Times where `u'` may be discontinuous (including 0 and the horizon).
    fn breakpoints(&self) -> Vec<f64>;
    /// `u(t)` and `u'(t)` on the smooth piece whose interior contains `hint`.
    fn eval(&self, hint: f64, t: f64, value: &mut [f64], rate: &mut [f64]);
    /// Time of the first jump, if any.
    fn first_jump(&self) -> Option<f64> {
        None
    }
}

impl ControlInput for ControlPath {
    fn dim(&self) -> usize {
        ControlPath::dim(self)
    }
    fn horizon(&self) -> f64 {
        ControlPath::horizon(self)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.knot_times().to_vec()
    }
    fn eval(&self, hint: f64, t: f64, value: &mut [f64], rate: &mut [f64]) {
        self.eval_on_segment(self.segment_containing(hint), t, value, rate)
    }
    fn first_jump(&self) -> Option<f64> {
        self.jumps().first().map(|j| j.t)
    }
}

type SmoothFn = dyn Fn(usize, f64, &mut [f64], &mut [f64]) + Send + Sync;

/// An input given in closed form, smooth on each piece between declared
/// breakpoints.
pub struct FnControl {
    dim: usize,
    breaks: Vec<f64>,
    f: Box<SmoothFn>,
}

impl FnControl {
    /// `f(piece, t, value, rate)` must fill `u(t)` and `u'(t)` using the
    /// formula of piece `piece` (`[breaks[piece], breaks[piece + 1]]`), even
    /// when `t` sits on the piece's end. `breaks` runs from 0 to the horizon.
    pub fn new(
        dim: usize,
        breaks: Vec<f64>,
        f: impl Fn(usize, f64, &mut [f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self { dim, breaks, f: Box::new(f) }
    }

    /// The piece whose interior contains `t` (the last one at the horizon).
    pub fn piece(&self, t: f64) -> usize {
        crate::num::locate(&self.breaks, t)
    }
}

impl ControlInput for FnControl {
    fn dim(&self) -> usize {
        self.dim
    }
    fn horizon(&self) -> f64 {
        *self.breaks.last().unwrap()
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
    fn eval(&self, hint: f64, t: f64, value: &mut [f64], rate: &mut [f64]) {
        (self.f)(self.piece(hint), t, value, rate)
    }
}

/// RK4 across consecutive cells `[c_i, c_{i+1}]`; returns the state at every
/// cell boundary (flat, `n` per boundary).
fn integrate_cells<R>(n: usize, x0: &[f64], cells: &[f64], steps_per_unit: usize, mut rhs: R) -> Result<Vec<f64>>
where
    R: FnMut(usize, f64, &[f64], &mut [f64]),
{
    let mut out = Vec::with_capacity(cells.len() * n);
    out.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for c in 0..cells.len().saturating_sub(1) {
        let (a, b) = (cells[c], cells[c + 1]);
        let steps = (((b - a) * steps_per_unit as f64) - 1e-9).ceil().max(1.0) as usize;
        let h = (b - a) / steps as f64;
        for i in 0..steps {
            let t = a + h * i as f64;
            rhs(c, t, &x, &mut k1);
            for j in 0..n {
                tmp[j] = x[j] + 0.5 * h * k1[j];
            }
            rhs(c, t + 0.5 * h, &tmp, &mut k2);
            for j in 0..n {
                tmp[j] = x[j] + 0.5 * h * k2[j];
            }
            rhs(c, t + 0.5 * h, &tmp, &mut k3);
            for j in 0..n {
                tmp[j] = x[j] + h * k3[j];
            }
            let t_next = if i + 1 == steps { b } else { t + h };
            rhs(c, t_next, &tmp, &mut k4);
            for j in 0..n {
                x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            let nx = norm(&x);
            if !nx.is_finite() || nx > DIVERGENCE_GUARD {
                return Err(Error::Divergence { at: t_next, norm: nx });
            }
        }
        out.extend_from_slice(&x);
    }
    Ok(out)
}

fn check_grid(grid: &[f64], horizon: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("output grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("output grid must be strictly increasing".into()));
    }
    let tol = 1e-12 * horizon.max(1.0);
    if grid[0] < -tol || *grid.last().unwrap() > horizon + tol {
        return Err(Error::OutOfDomain { t: *grid.last().unwrap(), horizon });
    }
    Ok(())
}

/// Carathéodory solution `x[x̄0, ū0, u, v]` sampled on `grid`.
pub fn solve_caratheodory<U: ControlInput + ?Sized>(
    fields: &VectorFieldSet,
    x0: &[f64],
    u: &U,
    v: &OrdinaryControl,
    grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let d = fields.dims();
    if x0.len() != d.n {
        return Err(Error::Dimension { expected: d.n, got: x0.len() });
    }
    if u.dim() != d.m {
        return Err(Error::Dimension { expected: d.m, got: u.dim() });
    }
    if v.dim() != d.v1 + d.v2 {
        return Err(Error::Dimension { expected: d.v1 + d.v2, got: v.dim() });
    }
    if let Some(t) = u.first_jump() {
        return Err(Error::JumpPresent { t });
    }
    let horizon = u.horizon();
    if (v.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::Config("u and v have different horizons".into()));
    }
    check_grid(grid, horizon)?;
    let tol = 1e-13 * horizon.max(1.0);
    let mut pts = u.breakpoints();
    pts.extend_from_slice(v.breaks());
    pts.extend_from_slice(grid);
    pts.retain(|t| *t >= 0.0 && *t <= horizon);
    pts.push(0.0);
    pts.push(horizon);
    let mut cells = merge_points(pts, tol);
    // grid points must survive the merge exactly
    for &g in grid {
        if let Some(i) = find_node(&cells, g) {
            cells[i] = g;
        }
    }
    let cell_v: Vec<usize> = cells
        .windows(2)
        .map(|w| v.cell_index(0.5 * (w[0] + w[1])))
        .collect();
    let mids: Vec<f64> = cells.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut uval = vec![0.0; d.m];
    let mut rate = vec![0.0; d.m];
    let mut scratch = vec![0.0; d.n];
    let states = integrate_cells(d.n, x0, &cells, cfg.steps_per_unit, |c, t, x, out| {
        u.eval(mids[c], t, &mut uval, &mut rate);
        fields.combine(x, &uval, v.cell(cell_v[c]), 1.0, &rate, out, &mut scratch);
    })?;
    let mut out = Vec::with_capacity(grid.len() * d.n);
    for &g in grid {
        let i = find_node(&cells, g).ok_or(Error::GridMismatch)?;
        out.extend_from_slice(&states[i * d.n..(i + 1) * d.n]);
    }
    Trajectory::new(d.n, grid.to_vec(), out)
}

/// Space-time solution `ξ[x̄0, ū0, φ0, φ, ψ]` on the nodes of `stc`.
pub fn solve_spacetime(
    fields: &VectorFieldSet,
    x0: &[f64],
    stc: &SpaceTimeControl,
    cfg: &IntegratorConfig,
) -> Result<ParamPath> {
    cfg.validate()?;
    let d = fields.dims();
    if x0.len() != d.n {
        return Err(Error::Dimension { expected: d.n, got: x0.len() });
    }
    if stc.u_dim() != d.m {
        return Err(Error::Dimension { expected: d.m, got: stc.u_dim() });
    }
    if stc.v_dim() != d.v1 + d.v2 {
        return Err(Error::Dimension { expected: d.v1 + d.v2, got: stc.v_dim() });
    }
    let params = stc.params();
    let times = stc.clock_times();
    let mut slopes = vec![0.0; d.m];
    let mut phi = vec![0.0; d.m];
    let mut scratch = vec![0.0; d.n];
    let states = integrate_cells(d.n, x0, params, cfg.steps_per_unit, |c, s, x, out| {
        let ds = params[c + 1] - params[c];
        let (p0, p1) = (stc.phi_node(c), stc.phi_node(c + 1));
        for i in 0..d.m {
            slopes[i] = (p1[i] - p0[i]) / ds;
            phi[i] = p0[i] + slopes[i] * (s - params[c]);
        }
        let w0 = (times[c + 1] - times[c]) / ds;
        fields.combine(x, &phi, stc.psi_cell(c), w0, &slopes, out, &mut scratch);
    })?;
    Ok(ParamPath::new(d.n, params.to_vec(), times.to_vec(), states))
}

/// `x(t) = ξ(σ(t))` on the grid; every skip of the clock is recorded as a
/// jump with `ξ(σ(t̄−))` and `ξ(σ(t̄))`.
pub fn reconstruct_solution(xi: &ParamPath, clock: &Clock, grid: &[f64]) -> Result<Trajectory> {
    let s_end = xi.end();
    if clock.end() > s_end * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::InvalidClock(format!(
            "clock reaches {} beyond the path end {}",
            clock.end(),
            s_end
        )));
    }
    check_grid(grid, clock.horizon())?;
    let mut states = Vec::with_capacity(grid.len() * xi.dim());
    for &t in grid {
        let s = clock.evaluate(t)?;
        states.extend(xi.at(s.min(s_end))?);
    }
    let mut traj = Trajectory::new(xi.dim(), grid.to_vec(), states)?;
    for skip in clock.skips() {
        traj.jumps.push(JumpRecord {
            t: skip.t,
            left: xi.at(skip.s_left)?,
            right: xi.at(skip.s_right.min(s_end))?,
        });
    }
    Ok(traj)
}

/// Graph-completion solution on `grid`: refines the graph so that every
/// `σ(t_i)` and every fiber end is a node before integrating.
pub fn graph_completion_solution(
    fields: &VectorFieldSet,
    x0: &[f64],
    stc: &SpaceTimeControl,
    clock: &Clock,
    grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<(Trajectory, ParamPath)> {
    let mut pts: Vec<f64> = grid.iter().map(|t| clock.eval(*t)).collect();
    for sk in clock.skips() {
        pts.push(sk.s_left);
        pts.push(sk.s_right);
    }
    let refined = stc.refine_at(&pts)?;
    let xi = solve_spacetime(fields, x0, &refined, cfg)?;
    let x = reconstruct_solution(&xi, clock, grid)?;
    Ok((x, xi))
}

/// Outcome of a step-halving study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// `sup |x_h - x_{h/2}|` and `sup |x_{h/2} - x_{h/4}|` over the grid.
    pub differences: [f64; 2],
    /// `log2` of the ratio of successive differences.
    pub order: f64,
    /// Richardson estimate of the error of the finest run.
    pub error: f64,
}

/// Run at `h`, `h/2`, `h/4` and report the observed order.
pub fn self_convergence_check<U: ControlInput + ?Sized>(
    fields: &VectorFieldSet,
    x0: &[f64],
    u: &U,
    v: &OrdinaryControl,
    grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<ConvergenceReport> {
    let runs: Vec<Trajectory> = [1, 2, 4]
        .iter()
        .map(|f| {
            let c = IntegratorConfig { steps_per_unit: cfg.steps_per_unit * f, ..*cfg };
            solve_caratheodory(fields, x0, u, v, grid, &c)
        })
        .collect::<Result<_>>()?;
    let d1 = crate::trajectory::sup_distance(&runs[0], &runs[1], grid)?;
    let d2 = crate::trajectory::sup_distance(&runs[1], &runs[2], grid)?;
    let order = (d1 / d2).log2();
    let error = d2 / (2f64.powf(order.clamp(1.0, 8.0)) - 1.0);
    Ok(ConvergenceReport { differences: [d1, d2], order, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control_set::ControlSet;
    use crate::fields::FieldDims;
    use crate::graph::{complete_graph, CompletionOptions};

    fn scalar_impulse() -> VectorFieldSet {
        VectorFieldSet::from_fns(
            "scalar",
            FieldDims { n: 1, m: 1, v1: 0, v2: 0 },
            |_, _, _, out| out[0] = 0.0,
            |_, _, _, _, out| out[0] = 1.0,
        )
    }

    fn drift_only() -> VectorFieldSet {
        VectorFieldSet::from_fns(
            "drift",
            FieldDims { n: 1, m: 1, v1: 1, v2: 0 },
            |_, _, v, out| out[0] = v[0],
            |_, _, _, _, out| out[0] = 0.0,
        )
    }

    fn exp_field() -> VectorFieldSet {
        VectorFieldSet::from_fns(
            "exp",
            FieldDims { n: 1, m: 1, v1: 0, v2: 0 },
            |x, _, _, out| out[0] = x[0],
            |_, _, _, _, out| out[0] = 0.0,
        )
    }

    fn grid(t: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t * i as f64 / n as f64).collect()
    }

    #[test]
    fn impulsive_channel_tracks_control() {
        let u = ControlPath::from_samples(&[0.0, 1.0], &[vec![0.0], vec![1.0]]).unwrap();
        let v = OrdinaryControl::zero(1.0, 0).unwrap();
        let x = solve_caratheodory(&scalar_impulse(), &[0.0], &u, &v, &grid(1.0, 4), &Default::default()).unwrap();
        assert!((x.last()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pure_drift() {
        let u = ControlPath::constant(2.0, vec![0.0]).unwrap();
        let v = OrdinaryControl::constant(2.0, vec![0.75]).unwrap();
        let g = grid(2.0, 8);
        let x = solve_caratheodory(&drift_only(), &[1.0], &u, &v, &g, &Default::default()).unwrap();
        for (i, t) in g.iter().enumerate() {
            assert!((x.state(i)[0] - (1.0 + 0.75 * t)).abs() < 1e-13);
        }
    }

    #[test]
    fn exponential_reaches_e() {
        let u = ControlPath::constant(1.0, vec![0.0]).unwrap();
        let v = OrdinaryControl::zero(1.0, 0).unwrap();
        let x = solve_caratheodory(&exp_field(), &[1.0], &u, &v, &[0.0, 1.0], &Default::default()).unwrap();
        assert!((x.last()[0] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn rk4_observed_order() {
        let u = ControlPath::constant(1.0, vec![0.0]).unwrap();
        let v = OrdinaryControl::zero(1.0, 0).unwrap();
        let rep = self_convergence_check(&exp_field(), &[1.0], &u, &v, &[0.0, 1.0], &IntegratorConfig::with_steps(8))
            .unwrap();
        assert!(rep.order > 3.5 && rep.order < 4.5, "order {}", rep.order);
    }

    #[test]
    fn jump_is_rejected() {
        let u = ControlPath::builder(vec![0.0]).hold_until(0.5).jump_to(vec![1.0]).hold_until(1.0).build().unwrap();
        let v = OrdinaryControl::zero(1.0, 0).unwrap();
        let r = solve_caratheodory(&scalar_impulse(), &[0.0], &u, &v, &[0.0, 1.0], &Default::default());
        assert_eq!(r.unwrap_err(), Error::JumpPresent { t: 0.5 });
    }

    #[test]
    fn divergence_is_reported() {
        let blow = VectorFieldSet::from_fns(
            "blow",
            FieldDims { n: 1, m: 1, v1: 0, v2: 0 },
            |x, _, _, out| out[0] = x[0] * x[0],
            |_, _, _, _, out| out[0] = 0.0,
        );
        let u = ControlPath::constant(2.0, vec![0.0]).unwrap();
        let v = OrdinaryControl::zero(2.0, 0).unwrap();
        let r = solve_caratheodory(&blow, &[1.0], &u, &v, &[0.0, 2.0], &Default::default());
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }

    #[test]
    fn fiber_integrates_impulsive_field() {
        let u = ControlPath::builder(vec![0.0]).hold_until(0.5).jump_to(vec![1.0]).hold_until(1.0).build().unwrap();
        let v = OrdinaryControl::zero(1.0, 0).unwrap();
        let set = ControlSet::cube(1, 0.0, 1.0).unwrap();
        let (stc, clock) = complete_graph(&u, &v, &set, &CompletionOptions::default()).unwrap();
        let xi = solve_spacetime(&scalar_impulse(), &[0.0], &stc, &Default::default()).unwrap();
        assert!((xi.state(xi.len() - 1)[0] - 1.0).abs() < 1e-13);
        let g = grid(1.0, 10);
        let x = reconstruct_solution(&xi, &clock, &g).unwrap();
        for (i, t) in g.iter().enumerate() {
            let expect = if *t >= 0.5 { 1.0 } else { 0.0 };
            assert!((x.state(i)[0] - expect).abs() < 1e-13, "t = {t}");
        }
        assert_eq!(x.jumps.len(), 1);
        assert!((x.jumps[0].left[0]).abs() < 1e-13 && (x.jumps[0].right[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn clock_beyond_path_is_rejected() {
        let xi = ParamPath::new(1, vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0]);
        let clock = Clock::new(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        assert!(reconstruct_solution(&xi, &clock, &[0.0, 1.0]).is_err());
    }
}
