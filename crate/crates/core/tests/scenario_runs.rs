use impulse_gc::{builtin_scenarios, run_scenario, RunOptions};

#[test]
fn every_builtin_scenario_passes() {
    for s in builtin_scenarios() {
        let start = std::time::Instant::now();
        let out = run_scenario(&s, &RunOptions::default()).unwrap();
        for c in &out.checks {
            println!("{:<18} {:<28} {:>12.3e} <= {:<10.1e} {}", s.id, c.name, c.value, c.limit, c.passed);
        }
        println!("{:<18} took {:?}", s.id, start.elapsed());
        assert!(out.passed(), "{}: {:?}", s.id, out.failures());
    }
}
