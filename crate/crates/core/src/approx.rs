//! Absolutely continuous approximating sequences for graph-completion
//! solutions, and the diagnostics that go with them.
//!
//! Given a completion `(φ0, φ, ψ)` and a clock `σ`, the sequence is
//! `u_k = φ ∘ σ_k`, `v_k = ψ ∘ σ_k` where `σ_k` replaces every skip of `σ` by
//! a steep linear ramp ending at the jump time.

use rayon::prelude::*;
use serde::Serialize;

use crate::bv::{ControlPath, OrdinaryControl};
use crate::clock::Clock;
use crate::control_set::ControlSet;
use crate::error::{Error, Result};
use crate::fields::VectorFieldSet;
use crate::graph::{compose, whitney_bridge, SpaceTimeControl};
use crate::num::{dist, fmt_f64, merge_points};
use crate::ode::{graph_completion_solution, solve_caratheodory, ControlInput, IntegratorConfig};
use crate::trajectory::{sup_distance, Trajectory};

/// `σ_k`: each skip of width `w` at `t̄ > 0` becomes a ramp on
/// `[t̄ - δ, t̄]` joining `σ(t̄ - δ)` to `σ(t̄)`, with
/// `δ = min(w / 2k, gap / 2)` and `gap` the distance to the previous skip
/// (or to 0). A skip at `t = 0` ramps forward on `[0, δ]` instead.
pub fn build_sigma_k(sigma: &Clock, k: u32) -> Result<Clock> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let skips = sigma.skips();
    if skips.is_empty() {
        return Ok(sigma.clone());
    }
    let horizon = sigma.horizon();
    // ramp windows [a, b] with the clock values at both ends
    let mut windows: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(skips.len());
    for (i, sk) in skips.iter().enumerate() {
        let w = sk.width();
        if sk.t == 0.0 {
            let next = skips.get(i + 1).map_or(horizon, |n| n.t);
            let delta = (w / (2.0 * k as f64)).min(0.5 * next);
            windows.push((0.0, 0.0, delta, sigma.eval(delta)));
        } else {
            let prev = if i == 0 { 0.0 } else { skips[i - 1].t };
            let delta = (w / (2.0 * k as f64)).min(0.5 * (sk.t - prev));
            let a = sk.t - delta;
            windows.push((a, sigma.eval(a), sk.t, sk.s_right));
        }
    }
    for &(a, sa, b, sb) in &windows {
        if (sb - sa) / (b - a) < 1.0 - 1e-12 {
            return Err(Error::InvalidClock(format!(
                "ramp on [{a}, {b}] would have slope below 1"
            )));
        }
    }
    let inside = |t: f64| windows.iter().any(|&(a, _, b, _)| t >= a && t <= b);
    let mut knots: Vec<(f64, f64)> = sigma.knots().filter(|(t, _)| !inside(*t)).collect();
    for &(a, sa, b, sb) in &windows {
        knots.push((a, sa));
        knots.push((b, sb));
    }
    knots.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    knots.dedup_by(|p, q| p.0 == q.0 && p.1 == q.1);
    Clock::new(knots.iter().map(|p| p.0).collect(), knots.iter().map(|p| p.1).collect())
}

/// One member `(u_k, v_k, x_k)` of an approximating sequence.
#[derive(Debug, Clone)]
pub struct ApproxMember {
    pub k: u32,
    pub sigma_k: Clock,
    pub u: ControlPath,
    pub v: OrdinaryControl,
    pub x: Trajectory,
}

/// Per-`k` convergence figures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxRecord {
    pub k: u32,
    pub var_uk: f64,
    pub sup_dist: f64,
    pub l1_u: f64,
    pub l1_v: f64,
    pub psi2_gap: f64,
    pub gronwall_lhs: f64,
    pub gronwall_rhs: f64,
    pub gronwall_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ApproxSequenceReport {
    pub records: Vec<ApproxRecord>,
}

impl ApproxSequenceReport {
    pub const CSV_HEADER: &'static str = "k,var_uk,sup_dist,l1_u,l1_v,psi2_gap,gronwall_lhs,gronwall_rhs";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let cols = [r.var_uk, r.sup_dist, r.l1_u, r.l1_v, r.psi2_gap, r.gronwall_lhs, r.gronwall_rhs];
            out.push_str(&r.k.to_string());
            for c in cols {
                out.push(',');
                out.push_str(&fmt_f64(c));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Sup distances are nonincreasing up to a relative `slack`; values
    /// below `floor` count as converged.
    pub fn is_monotone(&self, slack: f64, floor: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].sup_dist <= floor || w[1].sup_dist <= w[0].sup_dist * (1.0 + slack))
    }

    pub fn last(&self) -> Option<&ApproxRecord> {
        self.records.last()
    }
}

/// The target graph-completion solution together with its approximations.
#[derive(Debug, Clone)]
pub struct ApproxSequence {
    pub u: ControlPath,
    pub v: OrdinaryControl,
    pub target: Trajectory,
    pub members: Vec<ApproxMember>,
    pub report: ApproxSequenceReport,
}

fn check_ks(ks: &[u32]) -> Result<()> {
    if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("k-sweep must be nonempty, positive and strictly increasing".into()));
    }
    Ok(())
}

/// Build `u_k = φ ∘ σ_k`, `v_k = ψ ∘ σ_k`, solve for `x_k`, and compare
/// with the graph-completion solution `ξ ∘ σ` on `grid`. Members are
/// computed in parallel.
pub fn approximate_sequence(
    fields: &VectorFieldSet,
    x0: &[f64],
    stc: &SpaceTimeControl,
    sigma: &Clock,
    ks: &[u32],
    grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<ApproxSequence> {
    check_ks(ks)?;
    let (target, _) = graph_completion_solution(fields, x0, stc, sigma, grid, cfg)?;
    let (u, v) = compose(stc, sigma)?;
    let psi2 = stc.psi_control()?.components(fields.dims().v1..fields.v_dim())?;
    let results: Vec<(ApproxMember, ApproxRecord)> = ks
        .par_iter()
        .map(|&k| {
            let sigma_k = build_sigma_k(sigma, k)?;
            let (uk, vk) = compose(stc, &sigma_k)?;
            let xk = solve_caratheodory(fields, x0, &uk, &vk, grid, cfg)?;
            let var_uk = uk.total_variation();
            let v2k = vk.components(fields.dims().v1..fields.v_dim())?;
            let psi2_gap = check_psi2_condition(&v2k, &sigma_k, &psi2, sigma.horizon() + var_uk)?;
            let gw = gronwall_bound(fields, x0, &uk, &vk, &v, grid, cfg)?;
            let record = ApproxRecord {
                k,
                var_uk,
                sup_dist: sup_distance(&xk, &target, grid)?,
                l1_u: uk.l1_distance(&u)?,
                l1_v: vk.l1_distance(&v)?,
                psi2_gap,
                gronwall_lhs: gw.lhs,
                gronwall_rhs: gw.rhs,
                gronwall_holds: gw.holds,
            };
            Ok((ApproxMember { k, sigma_k, u: uk, v: vk, x: xk }, record))
        })
        .collect::<Result<_>>()?;
    let (members, records): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(ApproxSequence { u, v, target, members, report: ApproxSequenceReport { records } })
}

/// `∫_0^extent |v2_k(σ_k⁻¹(s)) - ψ2(s)| ds`, computed cell by cell in `s`.
/// Both controls are extended by their end values beyond their domains.
pub fn check_psi2_condition(v2_k: &OrdinaryControl, sigma_k: &Clock, psi2: &OrdinaryControl, extent: f64) -> Result<f64> {
    if v2_k.dim() != psi2.dim() {
        return Err(Error::Dimension { expected: psi2.dim(), got: v2_k.dim() });
    }
    if !sigma_k.is_continuous() {
        return Err(Error::InvalidClock("σ_k must be strictly increasing and continuous".into()));
    }
    if !(extent > 0.0) {
        return Ok(0.0);
    }
    let mut pts: Vec<f64> = v2_k.breaks().iter().map(|t| sigma_k.eval(*t)).collect();
    pts.extend(sigma_k.knots().map(|(_, s)| s));
    pts.extend_from_slice(psi2.breaks());
    pts.push(0.0);
    pts.push(extent);
    pts.retain(|s| *s >= 0.0 && *s <= extent);
    let pts = merge_points(pts, 1e-14 * extent.max(1.0));
    let (t_end, s_end) = (v2_k.horizon(), psi2.horizon());
    Ok(pts
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let t = sigma_k.preimage(mid).min(t_end);
            let a = v2_k.value(t).expect("clamped to the domain");
            let b = psi2.value(mid.min(s_end)).expect("clamped to the domain");
            dist(a, b) * (w[1] - w[0])
        })
        .sum())
}

/// Both sides of the Gronwall comparison between `x̂_k = x[u_k, v]` and
/// `x_k = x[u_k, v_k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallCheck {
    /// `sup_t |x̂_k(t) - x_k(t)|` on the grid.
    pub lhs: f64,
    /// `(∫ ω(|v_k - v|)(1 + Σ|u̇_k,i|)) · exp((m+1) L (T + Var u_k))`; the
    /// `Σ|u̇|` weight enters only when the channels depend on `v2`.
    pub rhs: f64,
    /// `lhs <= rhs + 1e-6 · exp((m+1) L (T + Var u_k))`.
    pub holds: bool,
}

pub fn gronwall_bound(
    fields: &VectorFieldSet,
    x0: &[f64],
    u_k: &ControlPath,
    v_k: &OrdinaryControl,
    v: &OrdinaryControl,
    grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<GronwallCheck> {
    let x_hat = solve_caratheodory(fields, x0, u_k, v, grid, cfg)?;
    let x_k = solve_caratheodory(fields, x0, u_k, v_k, grid, cfg)?;
    let lhs = sup_distance(&x_hat, &x_k, grid)?;
    let horizon = u_k.horizon();
    let mut pts = u_k.knot_times().to_vec();
    pts.extend_from_slice(v.breaks());
    pts.extend_from_slice(v_k.breaks());
    let pts = merge_points(pts, 1e-13 * horizon.max(1.0));
    let omega = fields.modulus();
    let weighted = fields.v2_active();
    let m = u_k.dim();
    let (mut val, mut rate) = (vec![0.0; m], vec![0.0; m]);
    let mut integral = 0.0;
    for w in pts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let dv = dist(v.value(mid)?, v_k.value(mid)?);
        if dv == 0.0 {
            continue;
        }
        let mut weight = len;
        if weighted {
            ControlInput::eval(u_k, mid, mid, &mut val, &mut rate);
            weight += rate.iter().map(|r| r.abs()).sum::<f64>() * len;
        }
        integral += omega.eval(dv) * weight;
    }
    let growth = ((m + 1) as f64 * fields.lipschitz() * (horizon + u_k.total_variation())).exp();
    let rhs = integral * growth;
    Ok(GronwallCheck { lhs, rhs, holds: lhs <= rhs + 1e-6 * growth })
}

/// Keep `u_k` on `[0, τ]` and follow the Whitney bridge from `u_k(τ)` to
/// `u_T` on `[τ, T]`, so that the modified control ends at `u_T`.
pub fn whitney_tail_fix(u_k: &ControlPath, tau: f64, u_t: &[f64], set: &ControlSet) -> Result<ControlPath> {
    let horizon = u_k.horizon();
    if !(tau > 0.0 && tau < horizon) {
        return Err(Error::Config(format!("tail start {tau} must lie in (0, {horizon})")));
    }
    if let Some(j) = u_k.jumps().first() {
        return Err(Error::JumpPresent { t: j.t });
    }
    let head = u_k.truncate(tau)?;
    let start = head.terminal().to_vec();
    let bridge = whitney_bridge(&start, u_t, set)?;
    let d = u_k.dim();
    let mut times = head.knot_times().to_vec();
    let mut values: Vec<f64> = (0..head.knot_count()).flat_map(|i| head.knot(i).to_vec()).collect();
    let total = bridge.variation();
    if total == 0.0 {
        times.push(horizon);
        values.extend_from_slice(&start);
    } else {
        let mut acc = 0.0;
        for pair in bridge.points().windows(2) {
            acc += dist(&pair[0], &pair[1]);
            times.push(tau + (horizon - tau) * (acc / total));
            values.extend_from_slice(&pair[1]);
        }
        *times.last_mut().unwrap() = horizon;
    }
    ControlPath::from_knots(d, times, values)
}

/// Deviation at one threshold `s̃` for one sequence member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquiuniformityEntry {
    pub member: usize,
    pub threshold: f64,
    /// `τ` with `τ + Var_{[0,τ]}(u) = s̃`, `None` when `s̃ > T + Var(u)`.
    pub tau: Option<f64>,
    /// `max(|x(τ) - x(T)|, |u(τ) - u(T)|)`.
    pub deviation: Option<f64>,
}

/// Raw deviations of each `(x_k, u_k)` from its endpoint at the graph
/// parameters `s̃_j`. No pass/fail is attached.
pub fn check_equiuniformity(seq: &[(Trajectory, ControlPath)], thresholds: &[f64]) -> Result<Vec<EquiuniformityEntry>> {
    if thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("thresholds must be increasing".into()));
    }
    let mut out = Vec::with_capacity(seq.len() * thresholds.len());
    for (member, (x, u)) in seq.iter().enumerate() {
        let horizon = u.horizon();
        let times = u.knot_times();
        let g: Vec<f64> = times.iter().map(|&t| t + u.variation_unchecked(t)).collect();
        let u_end = u.terminal().to_vec();
        let x_end = x.at(horizon);
        for &threshold in thresholds {
            let tau = graph_time(times, &g, threshold);
            let deviation = tau.map(|t| {
                let ut = u.value(t).expect("t within the horizon");
                dist(&x.at(t), &x_end).max(dist(&ut, &u_end))
            });
            out.push(EquiuniformityEntry { member, threshold, tau, deviation });
        }
    }
    Ok(out)
}

/// Invert the increasing map `t ↦ t + Var_{[0,t]}(u)` sampled at the knots.
fn graph_time(times: &[f64], g: &[f64], target: f64) -> Option<f64> {
    if target < 0.0 || target > *g.last().unwrap() * (1.0 + 1e-14) {
        return None;
    }
    let j = g.partition_point(|&v| v < target);
    if j == 0 {
        return Some(0.0);
    }
    if j >= g.len() {
        return Some(*times.last().unwrap());
    }
    let (g0, g1) = (g[j - 1], g[j]);
    if times[j] == times[j - 1] || g1 == g0 {
        return Some(times[j]);
    }
    Some(times[j - 1] + (target - g0) / (g1 - g0) * (times[j] - times[j - 1]))
}
