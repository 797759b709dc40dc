//! Sampled state trajectories `t ↦ x(t)` and parametrized paths `s ↦ ξ(s)`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::num::{dist, fmt_f64, lerp_into, locate};

const NODE_TOL: f64 = 1e-12;

/// Left and right values at a registered jump time.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub t: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// State samples on a strictly increasing time grid covering `[0, T]`.
///
/// At a jump time the stored sample is the value after the impulse; the value
/// before it is kept in [`Trajectory::jumps`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    n: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    pub jumps: Vec<JumpRecord>,
}

impl Trajectory {
    pub fn new(n: usize, times: Vec<f64>, states: Vec<f64>) -> Result<Self> {
        if times.is_empty() || states.len() != n * times.len() {
            return Err(Error::Dimension { expected: n * times.len(), got: states.len() });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("trajectory grid must be strictly increasing".into()));
        }
        Ok(Self { n, times, states, jumps: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.n..(i + 1) * self.n]
    }
    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Grid index of `t`, if `t` is a node.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        find_node(&self.times, t)
    }

    /// Linear interpolation between grid samples.
    pub fn at(&self, t: f64) -> Vec<f64> {
        if let Some(i) = self.node_index(t) {
            return self.state(i).to_vec();
        }
        if self.len() == 1 {
            return self.state(0).to_vec();
        }
        let i = locate(&self.times, t);
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        let mut out = vec![0.0; self.n];
        lerp_into(self.state(i), self.state(i + 1), w.clamp(0.0, 1.0), &mut out);
        out
    }

    /// Component `c` along the grid.
    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.state(i)[c]).collect()
    }

    /// CSV with header `t,x1,...,xn`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for i in 1..=self.n {
            let _ = write!(s, ",x{i}");
        }
        s.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            s.push_str(&fmt_f64(*t));
            for x in self.state(i) {
                s.push(',');
                s.push_str(&fmt_f64(*x));
            }
            s.push('\n');
        }
        s
    }
}

pub(crate) fn find_node(nodes: &[f64], t: f64) -> Option<usize> {
    let scale = NODE_TOL * nodes.last().map_or(1.0, |x| x.abs().max(1.0));
    let i = nodes.partition_point(|&p| p < t - scale);
    (i < nodes.len() && (nodes[i] - t).abs() <= scale).then_some(i)
}

/// `max_i |a(t_i) - b(t_i)|` over grid times that are nodes of both trajectories.
pub fn sup_distance(a: &Trajectory, b: &Trajectory, grid: &[f64]) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
    }
    let mut sup: f64 = 0.0;
    for &t in grid {
        let (i, j) = match (a.node_index(t), b.node_index(t)) {
            (Some(i), Some(j)) => (i, j),
            _ => return Err(Error::GridMismatch),
        };
        sup = sup.max(dist(a.state(i), b.state(j)));
    }
    Ok(sup)
}

/// A state path `ξ` sampled on parameter nodes `s_j`, with the clock time
/// `t_j = φ0(s_j)` carried alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPath {
    n: usize,
    params: Vec<f64>,
    clock_times: Vec<f64>,
    states: Vec<f64>,
}

impl ParamPath {
    pub(crate) fn new(n: usize, params: Vec<f64>, clock_times: Vec<f64>, states: Vec<f64>) -> Self {
        debug_assert_eq!(params.len(), clock_times.len());
        debug_assert_eq!(states.len(), n * params.len());
        Self { n, params, clock_times, states }
    }

    pub fn dim(&self) -> usize {
        self.n
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
    pub fn state(&self, j: usize) -> &[f64] {
        &self.states[j * self.n..(j + 1) * self.n]
    }
    pub fn end(&self) -> f64 {
        *self.params.last().unwrap()
    }

    /// `ξ(s)`, exact at nodes, linear between them.
    pub fn at(&self, s: f64) -> Result<Vec<f64>> {
        let scale = NODE_TOL * self.end().max(1.0);
        if s < -scale || s > self.end() + scale {
            return Err(Error::OutOfDomain { t: s, horizon: self.end() });
        }
        if let Some(j) = find_node(&self.params, s) {
            return Ok(self.state(j).to_vec());
        }
        let j = locate(&self.params, s);
        let w = (s - self.params[j]) / (self.params[j + 1] - self.params[j]);
        let mut out = vec![0.0; self.n];
        lerp_into(self.state(j), self.state(j + 1), w, &mut out);
        Ok(out)
    }

    /// CSV with header `s,t,x1,...,xn`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("s,t");
        for i in 1..=self.n {
            let _ = write!(s, ",x{i}");
        }
        s.push('\n');
        for j in 0..self.len() {
            s.push_str(&fmt_f64(self.params[j]));
            s.push(',');
            s.push_str(&fmt_f64(self.clock_times[j]));
            for x in self.state(j) {
                s.push(',');
                s.push_str(&fmt_f64(*x));
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    #[test]
    fn identical_trajectories() {
        let g = grid(10);
        let a = Trajectory::new(2, g.clone(), g.iter().flat_map(|t| [t.sin(), *t]).collect()).unwrap();
        assert_eq!(sup_distance(&a, &a.clone(), &g).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset() {
        let g = grid(7);
        let a = Trajectory::new(3, g.clone(), vec![0.0; 3 * g.len()]).unwrap();
        let b = Trajectory::new(3, g.clone(), g.iter().flat_map(|_| [1.0, 0.0, 0.0]).collect()).unwrap();
        assert_eq!(sup_distance(&a, &b, &g).unwrap(), 1.0);
    }

    #[test]
    fn mismatched_grid_rejected() {
        let a = Trajectory::new(1, grid(4), vec![0.0; 5]).unwrap();
        let b = Trajectory::new(1, grid(5), vec![0.0; 6]).unwrap();
        assert_eq!(sup_distance(&a, &b, &grid(4)), Err(Error::GridMismatch));
    }

    #[test]
    fn csv_header_and_rows() {
        let a = Trajectory::new(2, vec![0.0, 0.5], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(a.to_csv(), "t,x1,x2\n0.0,1.0,2.0\n0.5,3.0,4.0\n");
    }
}
