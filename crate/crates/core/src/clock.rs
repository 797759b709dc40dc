//! Clocks: strictly increasing maps `σ : [0, T] → [0, S]` that select where
//! each real time sits on a completed graph.
//!
//! A clock is stored as knots `(t_i, s_i)` with strictly increasing `s` and
//! nondecreasing `t`. Between knots with distinct times it is linear; two
//! knots sharing a time are a skip over a jump fiber. At a skip time the
//! clock takes the right end of the fiber, except at `t = 0` where
//! `σ(0) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::locate;

/// Which end of a jump fiber the clock selects at the jump time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpPolicy {
    #[default]
    RightEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clock {
    times: Vec<f64>,
    params: Vec<f64>,
    policy: JumpPolicy,
}

/// A skipped fiber `[s_left, s_right]` at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Skip {
    pub t: f64,
    pub s_left: f64,
    pub s_right: f64,
}

impl Skip {
    pub fn width(&self) -> f64 {
        self.s_right - self.s_left
    }
}

impl Clock {
    pub fn new(times: Vec<f64>, params: Vec<f64>) -> Result<Self> {
        if times.len() != params.len() || times.len() < 2 {
            return Err(Error::InvalidClock("need at least two (t, s) knots".into()));
        }
        if times[0] != 0.0 || params[0] != 0.0 {
            return Err(Error::InvalidClock("clock must start at (0, 0)".into()));
        }
        for i in 1..times.len() {
            if params[i] <= params[i - 1] {
                return Err(Error::InvalidClock(format!("parameters not strictly increasing at knot {i}")));
            }
            if times[i] < times[i - 1] {
                return Err(Error::InvalidClock(format!("times decrease at knot {i}")));
            }
            if i >= 2 && times[i] == times[i - 1] && times[i - 1] == times[i - 2] {
                return Err(Error::InvalidClock("three knots share a time".into()));
            }
        }
        Ok(Self { times, params, policy: JumpPolicy::RightEnd })
    }

    /// The identity-like clock `σ(t) = t` on `[0, T]`.
    pub fn identity(horizon: f64) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![0.0, horizon])
    }

    pub fn policy(&self) -> JumpPolicy {
        self.policy
    }
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }
    /// `σ(T)`.
    pub fn end(&self) -> f64 {
        *self.params.last().unwrap()
    }
    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.params.iter().copied())
    }
    pub(crate) fn knot_times(&self) -> &[f64] {
        &self.times
    }

    pub fn skips(&self) -> Vec<Skip> {
        (1..self.times.len())
            .filter(|&i| self.times[i] == self.times[i - 1])
            .map(|i| Skip { t: self.times[i], s_left: self.params[i - 1], s_right: self.params[i] })
            .collect()
    }

    pub fn is_continuous(&self) -> bool {
        self.times.windows(2).all(|w| w[1] > w[0])
    }

    /// `σ(t)` with range checking.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        let h = self.horizon();
        if !(t >= -1e-13 && t <= h + 1e-13 * h.max(1.0)) {
            return Err(Error::OutOfDomain { t, horizon: h });
        }
        Ok(self.eval(t))
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let j = self.times.partition_point(|&p| p <= t);
        if j >= self.times.len() {
            return self.end();
        }
        let i = j - 1;
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        self.params[i] + w * (self.params[i + 1] - self.params[i])
    }

    /// `σ(t−)`.
    pub fn left_limit(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let i = self.times.partition_point(|&p| p < t);
        if i >= self.times.len() {
            return self.end();
        }
        let w = (t - self.times[i - 1]) / (self.times[i] - self.times[i - 1]);
        self.params[i - 1] + w * (self.params[i] - self.params[i - 1])
    }

    /// Generalized inverse: the time whose clock image contains `s`; a
    /// parameter inside a skipped fiber maps to the skip time.
    pub fn preimage(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.end() {
            return self.horizon();
        }
        let i = locate(&self.params, s);
        let w = (s - self.params[i]) / (self.params[i + 1] - self.params[i]);
        self.times[i] + w * (self.times[i + 1] - self.times[i])
    }

    /// Smallest slope over the continuous pieces.
    pub fn min_slope(&self) -> f64 {
        (1..self.times.len())
            .filter(|&i| self.times[i] > self.times[i - 1])
            .map(|i| (self.params[i] - self.params[i - 1]) / (self.times[i] - self.times[i - 1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Adds knots at the given parameters so that a map which is linear
    /// between them can be composed exactly with [`Clock::map_params`].
    /// Parameters inside a skipped fiber are ignored.
    pub fn refine_params(&self, params: &[f64]) -> Result<Self> {
        let skips = self.skips();
        let mut knots: Vec<(f64, f64)> = self.knots().collect();
        for &s in params {
            if s <= 0.0 || s >= self.end() || skips.iter().any(|k| s >= k.s_left && s <= k.s_right) {
                continue;
            }
            knots.push((self.preimage(s), s));
        }
        knots.sort_by(|a, b| a.1.total_cmp(&b.1));
        knots.dedup_by(|b, a| (b.1 - a.1).abs() <= 1e-14 * a.1.abs().max(1.0));
        Self::new(knots.iter().map(|k| k.0).collect(), knots.iter().map(|k| k.1).collect())
    }

    /// Compose with a parameter map `s ↦ r` (for instance the
    /// reparametrization from feasibility normalization).
    pub fn map_params(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut times = Vec::with_capacity(self.times.len());
        let mut params: Vec<f64> = Vec::with_capacity(self.params.len());
        for (t, s) in self.knots() {
            let r = f(s);
            if let Some(&last) = params.last() {
                if r <= last {
                    continue;
                }
            }
            times.push(t);
            params.push(r);
        }
        Self::new(times, params)
    }

    /// JSON form: sorted `[t, s]` pairs.
    pub fn to_json(&self) -> Vec<[f64; 2]> {
        self.knots().map(|(t, s)| [t, s]).collect()
    }

    pub fn from_json(pairs: &[[f64; 2]]) -> Result<Self> {
        Self::new(pairs.iter().map(|p| p[0]).collect(), pairs.iter().map(|p| p[1]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_jump_clock() -> Clock {
        Clock::new(vec![0.0, 0.5, 0.5, 1.0], vec![0.0, 0.5, 1.5, 2.0]).unwrap()
    }

    #[test]
    fn refinement_keeps_values() {
        let c = unit_jump_clock();
        let r = c.refine_params(&[0.25, 1.0, 1.75, 2.0]).unwrap();
        assert_eq!(r.knots().count(), 6);
        for t in [0.1, 0.3, 0.5, 0.8, 1.0] {
            assert!((r.evaluate(t).unwrap() - c.evaluate(t).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn skip_selects_right_end() {
        let c = unit_jump_clock();
        assert_eq!(c.evaluate(0.5).unwrap(), 1.5);
        assert_eq!(c.left_limit(0.5), 0.5);
        let below: Vec<f64> = [1e-2, 1e-4, 1e-8].iter().map(|e| c.evaluate(0.5 - e).unwrap()).collect();
        assert!(below.iter().all(|s| *s < 0.5));
        assert!((below[2] - 0.5).abs() < 1e-7);
        assert_eq!(c.evaluate(1.0).unwrap(), 2.0);
    }

    #[test]
    fn out_of_domain() {
        assert!(unit_jump_clock().evaluate(1.1).is_err());
    }

    #[test]
    fn preimage_collapses_fiber() {
        let c = unit_jump_clock();
        assert_eq!(c.preimage(1.0), 0.5);
        assert_eq!(c.preimage(1.75), 0.75);
        assert_eq!(c.preimage(0.25), 0.25);
    }

    #[test]
    fn rejects_non_increasing() {
        assert!(Clock::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 0.5]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = unit_jump_clock();
        assert_eq!(Clock::from_json(&c.to_json()).unwrap(), c);
    }
}
