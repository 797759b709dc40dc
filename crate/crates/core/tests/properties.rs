use proptest::prelude::*;

use impulse_gc::scenarios::{
    brockett_fields, brockett_v2_fields, commutative_fields, scalar_fields, scenario_by_id, uniform_grid,
};
use impulse_gc::*;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 2)
}

/// Hold, jump at `t_jump`, then drift linearly to `end`.
fn jump_path(u0: Vec<f64>, t_jump: f64, after: Vec<f64>, end: Vec<f64>) -> ControlPath {
    ControlPath::builder(u0).hold_until(t_jump).jump_to(after).line_to(1.0, end).build().unwrap()
}

fn box2() -> ControlSet {
    ControlSet::cube(2, -1.0, 1.0).unwrap()
}

fn bridge_choice() -> impl Strategy<Value = BridgeChoice> {
    prop_oneof![Just(BridgeChoice::Whitney), Just(BridgeChoice::Straight), Just(BridgeChoice::TwoLeg)]
}

/// Slows the parametrization down cell by cell: each weight in `[1, 2]`
/// stretches one of `weights.len()` equal pieces of `[0, S]`.
fn slow_down(stc: &SpaceTimeControl, clock: &Clock, weights: &[f64]) -> (SpaceTimeControl, Clock) {
    let s = stc.horizon();
    let n = weights.len();
    let old: Vec<f64> = (0..=n).map(|i| s * i as f64 / n as f64).collect();
    let mut new = vec![0.0];
    for w in weights {
        new.push(new.last().unwrap() + w * s / n as f64);
    }
    let slow = stc.reparametrize(&new, &old).unwrap();
    let map = |p: f64| {
        let i = old.partition_point(|&q| q <= p).clamp(1, n) - 1;
        new[i] + (p - old[i]) / (old[i + 1] - old[i]) * (new[i + 1] - new[i])
    };
    (slow, clock.refine_params(&old).unwrap().map_params(map).unwrap())
}

/// `∫ x1 du2 - x2 du1` along the polyline, with `(x1, x2)` measured from its
/// first point.
fn brockett_area(points: &[Vec<f64>]) -> f64 {
    let o = &points[0];
    points
        .windows(2)
        .map(|w| (w[0][0] - o[0]) * (w[1][1] - w[0][1]) - (w[0][1] - o[1]) * (w[1][0] - w[0][0]))
        .sum()
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn solutions_do_not_depend_on_the_rate(
        u0 in point(), after in point(), end in point(),
        t_jump in 0.1..0.9f64,
        weights in prop::collection::vec(1.0..2.0f64, 1..6),
    ) {
        let fields = brockett_fields();
        let u = jump_path(u0, t_jump, after, end);
        let v = OrdinaryControl::zero(1.0, 0).unwrap();
        let grid = uniform_grid(1.0, 41);
        let cfg = IntegratorConfig::default();
        let (stc, clock) = complete_graph(&u, &v, &box2(), &CompletionOptions::default()).unwrap();
        let (slow, slow_clock) = slow_down(&stc, &clock, &weights);
        let (xa, _) = graph_completion_solution(&fields, &[0.0; 3], &stc, &clock, &grid, &cfg).unwrap();
        let (xb, _) = graph_completion_solution(&fields, &[0.0; 3], &slow, &slow_clock, &grid, &cfg).unwrap();
        prop_assert!(sup_distance(&xa, &xb, &grid).unwrap() <= 4.0 * cfg.tolerance);
    }

    #[test]
    fn normalization_restores_unit_speed(
        u0 in point(), after in point(), end in point(),
        weights in prop::collection::vec(1.0..2.0f64, 1..6),
    ) {
        let u = jump_path(u0, 0.5, after, end);
        let v = OrdinaryControl::constant(1.0, vec![0.3]).unwrap();
        let (stc, clock) = complete_graph(&u, &v, &box2(), &CompletionOptions::default()).unwrap();
        let (slow, _) = slow_down(&stc, &clock, &weights);
        prop_assert!(!slow.is_feasible() || weights.iter().all(|w| (w - 1.0).abs() < 1e-8));
        let (normal, r) = normalize_feasible(&slow).unwrap();
        prop_assert!(normal.feasibility_residual() < 1e-8);
        prop_assert!((normal.horizon() - stc.horizon()).abs() < 1e-9);
        prop_assert!((r.total() - normal.horizon()).abs() < 1e-9);
        prop_assert!((normal.phi_variation() - stc.phi_variation()).abs() < 1e-9);
    }

    #[test]
    fn commutative_solutions_ignore_the_bridge(
        u0 in point(), after in point(), end in point(),
        a in bridge_choice(), b in bridge_choice(),
        drift in -1.0..1.0f64,
    ) {
        let fields = commutative_fields();
        let u = jump_path(u0.clone(), 0.5, after, end.clone());
        let v = OrdinaryControl::constant(1.0, vec![drift]).unwrap();
        let grid = uniform_grid(1.0, 41);
        let cfg = IntegratorConfig::default();
        let solve = |choice: BridgeChoice| {
            let opts = CompletionOptions::default().with_bridges(choice, 1);
            let (stc, clock) = complete_graph(&u, &v, &box2(), &opts).unwrap();
            graph_completion_solution(&fields, &[0.0, 0.0], &stc, &clock, &grid, &cfg).unwrap().0
        };
        let (xa, xb) = (solve(a), solve(b));
        prop_assert!(sup_distance(&xa, &xb, &grid).unwrap() <= 4.0 * cfg.tolerance);
        // constant channels: x(T) = G (u(T) - u(0)) + drift T
        let (d1, d2) = (end[0] - u0[0], end[1] - u0[1]);
        let exact = [d1 - 0.5 * d2 + drift, 0.5 * d1 + d2];
        prop_assert!((xa.last()[0] - exact[0]).abs() < 1e-9);
        prop_assert!((xa.last()[1] - exact[1]).abs() < 1e-9);
    }

    #[test]
    fn brockett_endpoint_is_the_enclosed_line_integral(
        u0 in point(), after in point(), end in point(),
        choice in prop_oneof![Just(BridgeChoice::Straight), Just(BridgeChoice::TwoLeg)],
    ) {
        let u = jump_path(u0.clone(), 0.5, after.clone(), end.clone());
        let v = OrdinaryControl::zero(1.0, 0).unwrap();
        let opts = CompletionOptions::default().with_bridges(choice.clone(), 1);
        let (stc, clock) = complete_graph(&u, &v, &box2(), &opts).unwrap();
        let grid = uniform_grid(1.0, 11);
        let (x, _) =
            graph_completion_solution(&brockett_fields(), &[0.0; 3], &stc, &clock, &grid, &IntegratorConfig::default())
                .unwrap();
        let bridge = match choice {
            BridgeChoice::TwoLeg => Bridge::two_leg(&u0, &after),
            _ => Bridge::straight(&u0, &after),
        };
        let mut poly = bridge.points().to_vec();
        poly.push(end);
        prop_assert!((x.last()[2] - brockett_area(&poly)).abs() < 1e-9);
    }

    #[test]
    fn gronwall_comparison_holds(k in 2u32..200, after in point(), psi in 0.0..1.0f64) {
        let mut s = scenario_by_id("brockett-v2-jump").unwrap();
        s.fields = brockett_v2_fields();
        s.u = jump_path(vec![0.0, 0.0], 0.5, after, vec![0.0, 0.0]);
        s.completion.fiber_controls = vec![Some(vec![0.5, psi])];
        let (stc, clock) = complete_graph(&s.u, &s.v, &s.u_set, &s.completion).unwrap();
        let seq =
            approximate_sequence(&s.fields, &s.x0, &stc, &clock, &[k], &s.grid(), &IntegratorConfig::default()).unwrap();
        let r = &seq.report.records[0];
        prop_assert!(r.gronwall_holds, "lhs {} rhs {}", r.gronwall_lhs, r.gronwall_rhs);
        prop_assert!(r.gronwall_rhs.is_finite());
        prop_assert!(r.psi2_gap < 1e-6);
    }

    #[test]
    fn sigma_k_is_a_steep_continuous_clock(k in 1u32..5000, t_jump in 0.05..0.95f64, width in 0.1..3.0f64) {
        let sigma = Clock::new(vec![0.0, t_jump, t_jump, 1.0], vec![0.0, t_jump, t_jump + width, 1.0 + width]).unwrap();
        let sk = build_sigma_k(&sigma, k).unwrap();
        prop_assert!(sk.is_continuous());
        prop_assert!(sk.min_slope() >= 1.0 - 1e-12);
        prop_assert!((sk.evaluate(1.0).unwrap() - sigma.evaluate(1.0).unwrap()).abs() < 1e-12);
        let delta = (width / (2.0 * k as f64)).min(t_jump / 2.0);
        for t in [0.0, t_jump - delta - 1e-9, t_jump, 0.5 * (t_jump + 1.0), 1.0] {
            if t < 0.0 { continue; }
            prop_assert!((sk.evaluate(t).unwrap() - sigma.evaluate(t).unwrap()).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn variation_is_monotone_and_additive(
        steps in prop::collection::vec((0.01..0.3f64, -2.0..2.0f64, any::<bool>()), 1..12),
    ) {
        let mut b = ControlPath::builder(vec![0.0]);
        let mut t = 0.0;
        let mut expected = 0.0;
        let mut prev = 0.0;
        let mut jumped = true;
        for (dt, val, jump) in &steps {
            // two jumps in a row are one jump
            jumped = *jump && !jumped;
            if jumped {
                b = b.jump_to(vec![*val]);
            } else {
                t += dt;
                b = b.line_to(t, vec![*val]);
            }
            expected += (val - prev).abs();
            prev = *val;
        }
        if t == 0.0 {
            b = b.hold_until(1.0);
        }
        let u = b.build().unwrap();
        prop_assert!((u.total_variation() - expected).abs() < 1e-9);
        let grid = uniform_grid(u.horizon(), 25);
        let vars: Vec<f64> = grid.iter().map(|&t| u.variation(t).unwrap()).collect();
        prop_assert!(vars.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        prop_assert!((vars[24] - u.total_variation()).abs() < 1e-9);
        let back = ControlPath::from_json(&u.to_json()).unwrap();
        prop_assert_eq!(back, u);
    }

    #[test]
    fn scalar_jump_endpoint_is_exact(size in -3.0..3.0f64, k in 1u32..2000) {
        let u = ControlPath::builder(vec![0.0]).hold_until(0.5).jump_to(vec![size]).hold_until(1.0).build().unwrap();
        let v = OrdinaryControl::zero(1.0, 0).unwrap();
        let set = ControlSet::cube(1, -3.0, 3.0).unwrap();
        let (stc, clock) = complete_graph(&u, &v, &set, &CompletionOptions::default()).unwrap();
        let seq = approximate_sequence(
            &scalar_fields(), &[0.0], &stc, &clock, &[k], &uniform_grid(1.0, 11), &IntegratorConfig::default(),
        ).unwrap();
        prop_assert!((seq.members[0].x.last()[0] - size).abs() < 1e-12);
        prop_assert!((seq.report.records[0].var_uk - size.abs()).abs() < 1e-12);
    }
}
