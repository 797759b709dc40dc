pub mod approx;
pub mod bv;
pub mod clock;
pub mod control_set;
pub mod error;
pub mod fields;
pub mod graph;
pub mod ode;
mod num;
pub mod scenarios;
pub mod trajectory;

pub use bv::{ControlPath, Jump, OrdinaryControl};
pub use control_set::ControlSet;
pub use error::{Error, Result};
pub use fields::{FieldDims, Modulus, VectorFieldSet};
pub use num::fmt_f64;
pub use trajectory::{sup_distance, JumpRecord, ParamPath, Trajectory};
pub use clock::Clock;
pub use graph::{
    arc_length_param, complete_graph, compose, normalize_feasible, whitney_bridge, Bridge, BridgeChoice,
    CompletionOptions, Reparametrization, SpaceTimeControl,
};
pub use ode::{
    graph_completion_solution, reconstruct_solution, self_convergence_check, solve_caratheodory, solve_spacetime,
    ControlInput, ConvergenceReport, FnControl, IntegratorConfig,
};
pub use approx::{
    approximate_sequence, build_sigma_k, check_equiuniformity, check_psi2_condition, gronwall_bound, whitney_tail_fix,
    ApproxMember, ApproxRecord, ApproxSequence, ApproxSequenceReport, EquiuniformityEntry, GronwallCheck,
};
pub use scenarios::{builtin_scenarios, run_scenario, scenario_by_id, RunOptions, Scenario, ScenarioOutcome};
