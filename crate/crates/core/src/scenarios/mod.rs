//! Built-in systems with their data, cost functionals and acceptance
//! settings.

mod examples;
mod run;

use serde::Serialize;

use crate::bv::{ControlPath, OrdinaryControl};
use crate::control_set::{ControlSet, Geometry};
use crate::error::{Error, Result};
use crate::fields::{FieldDims, Modulus, VectorFieldSet};
use crate::graph::{BridgeChoice, CompletionOptions};

pub use examples::{
    bolza_closed_form, cost_bolza, cost_mayer, example21_closed_form, example21_controls, example21_endpoint,
    example21_fields, example21_input, example21_v, example22_fields, example22_x5, mayer_from_endpoint,
    EndpointValues, CUTOFF_RADIUS, TWO_PI,
};
pub use run::{random_vanishing_control, run_scenario, Check, RunOptions, ScenarioOutcome, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    Bolza,
    Mayer,
    None,
}

/// `x_component(T) = value`, checked within the scenario tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointConstraint {
    pub component: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: &'static str,
    pub description: &'static str,
    /// Built for this library rather than taken from the literature.
    pub synthetic: bool,
    pub fields: VectorFieldSet,
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub u_set: ControlSet,
    pub v_set: Option<ControlSet>,
    /// The control whose solution is studied; `u(0)` is the initial control.
    pub u: ControlPath,
    pub v: OrdinaryControl,
    pub completion: CompletionOptions,
    pub cost: CostKind,
    pub endpoint: Option<EndpointConstraint>,
    pub tolerance: f64,
    pub ks: Vec<u32>,
    /// Output grid size (points, including both ends).
    pub grid_points: usize,
}

impl Scenario {
    pub fn u0(&self) -> &[f64] {
        self.u.initial()
    }

    /// Uniform output grid on `[0, T]`.
    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.horizon, self.grid_points)
    }

    pub fn manifest(&self) -> ScenarioManifest {
        let d = self.fields.dims();
        ScenarioManifest {
            id: self.id.to_string(),
            description: self.description.to_string(),
            synthetic: self.synthetic,
            n: d.n,
            m: d.m,
            v1: d.v1,
            v2: d.v2,
            horizon: self.horizon,
            x0: self.x0.clone(),
            u0: self.u0().to_vec(),
            u_set: self.u_set.geometry.clone(),
            v_set: self.v_set.as_ref().map(|s| s.geometry.clone()),
            cost: self.cost,
            endpoint: self.endpoint,
            lipschitz: self.fields.lipschitz(),
            growth: self.fields.growth(),
            modulus: self.fields.modulus().clone(),
            tolerance: self.tolerance,
            ks: self.ks.clone(),
        }
    }
}

/// JSON description of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioManifest {
    pub id: String,
    pub description: String,
    pub synthetic: bool,
    pub n: usize,
    pub m: usize,
    pub v1: usize,
    pub v2: usize,
    pub horizon: f64,
    pub x0: Vec<f64>,
    pub u0: Vec<f64>,
    pub u_set: Geometry,
    pub v_set: Option<Geometry>,
    pub cost: CostKind,
    pub endpoint: Option<EndpointConstraint>,
    pub lipschitz: f64,
    pub growth: f64,
    pub modulus: Modulus,
    pub tolerance: f64,
    pub ks: Vec<u32>,
}

pub fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    let n = points.max(2) - 1;
    let mut g: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
    g[n] = horizon;
    g
}

/// `x1' = u1'`, `x2' = u2'`, `x3' = x1 u2' - x2 u1'`.
pub fn brockett_fields() -> VectorFieldSet {
    VectorFieldSet::from_fns(
        "brockett",
        FieldDims { n: 3, m: 2, v1: 0, v2: 0 },
        |_, _, _, out| out.fill(0.0),
        |i, x, _, _, out| {
            if i == 0 {
                out.copy_from_slice(&[1.0, 0.0, -x[1]]);
            } else {
                out.copy_from_slice(&[0.0, 1.0, x[0]]);
            }
        },
    )
    .with_lipschitz(1.0)
    .with_growth(1.0)
}

/// Brockett channels scaled by `1 + v2/2`, with drift `(0, 0, -v1 x3)`.
pub fn brockett_v2_fields() -> VectorFieldSet {
    VectorFieldSet::from_fns(
        "brockett-v2",
        FieldDims { n: 3, m: 2, v1: 1, v2: 1 },
        |x, _, v1, out| out.copy_from_slice(&[0.0, 0.0, -v1[0] * x[2]]),
        |i, x, _, v2, out| {
            let c = 1.0 + 0.5 * v2[0];
            if i == 0 {
                out.copy_from_slice(&[c, 0.0, -c * x[1]]);
            } else {
                out.copy_from_slice(&[0.0, c, c * x[0]]);
            }
        },
    )
    .with_lipschitz(1.5)
    .with_growth(1.5)
    // valid on |x| <= 10: |Δg0| <= |x3| |Δv1|, |Δgi| <= sqrt(1 + |x|²) |Δv2| / 2
    .with_modulus(Modulus::Lipschitz(12.0))
}

/// `x' = u'`.
pub fn scalar_fields() -> VectorFieldSet {
    VectorFieldSet::from_fns(
        "scalar",
        FieldDims { n: 1, m: 1, v1: 0, v2: 0 },
        |_, _, _, out| out[0] = 0.0,
        |_, _, _, _, out| out[0] = 1.0,
    )
    .with_lipschitz(0.0)
    .with_growth(1.0)
}

/// Two constant channels, so every Lie bracket vanishes.
pub fn commutative_fields() -> VectorFieldSet {
    VectorFieldSet::from_fns(
        "commutative",
        FieldDims { n: 2, m: 2, v1: 1, v2: 0 },
        |_, _, v1, out| out.copy_from_slice(&[v1[0], 0.0]),
        |i, _, _, _, out| {
            if i == 0 {
                out.copy_from_slice(&[1.0, 0.5]);
            } else {
                out.copy_from_slice(&[-0.5, 1.0]);
            }
        },
    )
    .with_lipschitz(0.0)
    .with_growth(1.2)
    .with_modulus(Modulus::Lipschitz(1.0))
}

/// Fields by scenario identifier (`brockett-v2` is accepted as an alias).
pub fn fields_by_id(id: &str) -> Result<VectorFieldSet> {
    Ok(match id {
        "example-2.1" => example21_fields(),
        "example-2.2" => example22_fields(),
        "brockett" => brockett_fields(),
        "brockett-v2-jump" | "brockett-v2" => brockett_v2_fields(),
        "scalar-jump" | "scalar" => scalar_fields(),
        "commutative-pair" | "commutative" => commutative_fields(),
        other => return Err(Error::UnknownScenario(other.to_string())),
    })
}

fn jump_path(dim: usize, to: Vec<f64>, t_bar: f64, horizon: f64) -> ControlPath {
    ControlPath::builder(vec![0.0; dim])
        .hold_until(t_bar)
        .jump_to(to)
        .hold_until(horizon)
        .build()
        .expect("static jump path")
}

pub fn builtin_scenarios() -> Vec<Scenario> {
    let ball = |r| ControlSet::ball(vec![0.0, 0.0], r).expect("static set");
    let square = ControlSet::cube(2, -1.0, 1.0).expect("static set");
    vec![
        Scenario {
            id: "example-2.1",
            description: "Four-dimensional oscillator with Bolza cost; regular minimizing sequences have unbounded variation",
            synthetic: false,
            fields: example21_fields(),
            x0: vec![0.0, 0.0, 1.0, 0.0],
            horizon: TWO_PI,
            u_set: ball(1.0),
            v_set: Some(ControlSet::cube(1, -1.0, 1.0).expect("static set")),
            u: ControlPath::constant(TWO_PI, vec![0.0, 0.0]).expect("static path"),
            v: OrdinaryControl::zero(TWO_PI, 1).expect("static control"),
            completion: CompletionOptions::default(),
            cost: CostKind::Bolza,
            endpoint: None,
            tolerance: 1e-4,
            ks: vec![16, 64, 256],
            grid_points: 10_000,
        },
        Scenario {
            id: "example-2.2",
            description: "The oscillator with an appended cost state, Mayer cost and endpoint constraint x5 = 0",
            synthetic: false,
            fields: example22_fields(),
            x0: vec![0.0, 0.0, 1.0, 0.0, 0.0],
            horizon: TWO_PI,
            u_set: ball(1.0),
            v_set: Some(ControlSet::cube(1, -1.0, 1.0).expect("static set")),
            u: ControlPath::constant(TWO_PI, vec![0.0, 0.0]).expect("static path"),
            v: OrdinaryControl::zero(TWO_PI, 1).expect("static control"),
            completion: CompletionOptions::default(),
            cost: CostKind::Mayer,
            endpoint: Some(EndpointConstraint { component: 4, value: 0.0 }),
            tolerance: 1e-2,
            ks: vec![16, 64, 256],
            grid_points: 10_000,
        },
        Scenario {
            id: "brockett",
            description: "Nonholonomic integrator with a single jump (0,0) -> (1,1)",
            synthetic: false,
            fields: brockett_fields(),
            x0: vec![0.0; 3],
            horizon: 1.0,
            u_set: square.clone(),
            v_set: None,
            u: jump_path(2, vec![1.0, 1.0], 0.5, 1.0),
            v: OrdinaryControl::zero(1.0, 0).expect("static control"),
            completion: CompletionOptions::default().with_bridges(BridgeChoice::TwoLeg, 1),
            cost: CostKind::None,
            endpoint: None,
            tolerance: 1e-3,
            ks: vec![16, 64, 256],
            grid_points: 101,
        },
        Scenario {
            id: "scalar-jump",
            description: "x' = u' with a unit jump at t = 0.5",
            synthetic: false,
            fields: scalar_fields(),
            x0: vec![0.0],
            horizon: 1.0,
            u_set: ControlSet::cube(1, 0.0, 1.0).expect("static set"),
            v_set: None,
            u: jump_path(1, vec![1.0], 0.5, 1.0),
            v: OrdinaryControl::zero(1.0, 0).expect("static control"),
            completion: CompletionOptions::default(),
            cost: CostKind::None,
            endpoint: Some(EndpointConstraint { component: 0, value: 1.0 }),
            tolerance: 1e-12,
            ks: vec![16, 64, 256],
            grid_points: 101,
        },
        Scenario {
            id: "commutative-pair",
            description: "Two constant impulsive channels with drift; the jump rule does not depend on the bridge",
            synthetic: false,
            fields: commutative_fields(),
            x0: vec![0.0, 0.0],
            horizon: 1.0,
            u_set: square.clone(),
            v_set: Some(ControlSet::cube(1, -1.0, 1.0).expect("static set")),
            u: jump_path(2, vec![1.0, 1.0], 0.5, 1.0),
            v: OrdinaryControl::constant(1.0, vec![0.5]).expect("static control"),
            completion: CompletionOptions::default(),
            cost: CostKind::None,
            endpoint: None,
            tolerance: 1e-8,
            ks: vec![16, 64, 256],
            grid_points: 101,
        },
        Scenario {
            id: "brockett-v2-jump",
            description: "Brockett channels scaled by (1 + v2/2) with a decaying drift and a jump (0,0) -> (1,1)",
            synthetic: true,
            fields: brockett_v2_fields(),
            x0: vec![0.0; 3],
            horizon: 1.0,
            u_set: square,
            v_set: Some(ControlSet::cube(2, 0.0, 1.0).expect("static set")),
            u: jump_path(2, vec![1.0, 1.0], 0.5, 1.0),
            v: OrdinaryControl::constant(1.0, vec![0.5, 0.0]).expect("static control"),
            completion: CompletionOptions {
                bridges: vec![BridgeChoice::TwoLeg],
                fiber_controls: vec![Some(vec![0.5, 1.0])],
                ..CompletionOptions::default()
            },
            cost: CostKind::None,
            endpoint: None,
            tolerance: 1e-2,
            ks: vec![16, 64, 256],
            grid_points: 101,
        },
    ]
}

pub fn scenario_by_id(id: &str) -> Result<Scenario> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::UnknownScenario(id.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_consistent_scenarios() {
        let all = builtin_scenarios();
        assert_eq!(all.len(), 6);
        for s in &all {
            assert_eq!(s.x0.len(), s.fields.n(), "{}", s.id);
            assert_eq!(s.u.dim(), s.fields.m(), "{}", s.id);
            assert_eq!(s.v.dim(), s.fields.v_dim(), "{}", s.id);
            assert!(s.u_set.contains(s.u0()), "{}", s.id);
            s.u.check_in(&s.u_set).unwrap();
            assert!(s.ks.windows(2).all(|w| w[1] > w[0]));
            let json = serde_json::to_string(&s.manifest()).unwrap();
            assert!(json.contains(s.id));
        }
        let ex = scenario_by_id("example-2.1").unwrap();
        assert_eq!((ex.fields.n(), ex.horizon), (4, TWO_PI));
        assert!(scenario_by_id("brockett-v2-jump").unwrap().synthetic);
        assert!(matches!(scenario_by_id("nope"), Err(Error::UnknownScenario(_))));
    }
}
