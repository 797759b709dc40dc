//! `impulse-gc`: run built-in scenarios and complete user-supplied controls.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use impulse_gc::bv::{ControlPathJson, OrdinaryControlJson};
use impulse_gc::graph::{BridgeChoice, CompletionOptions};
use impulse_gc::ode::IntegratorConfig;
use impulse_gc::scenarios::{fields_by_id, uniform_grid};
use impulse_gc::{
    builtin_scenarios, complete_graph, fmt_f64, graph_completion_solution, normalize_feasible, run_scenario,
    scenario_by_id, Bridge, ControlPath, ControlSet, Error, OrdinaryControl, RunOptions, Trajectory,
};

const SEED_VAR: &str = "IMPULSE_GC_SEED";

#[derive(Parser)]
#[command(name = "impulse-gc", version, about = "Graph-completion solutions of impulsive control systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a built-in scenario and its acceptance checks.
    Run {
        id: String,
        /// Comma-separated, strictly increasing k-sweep.
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<u32>>,
        /// RK4 steps per unit time.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Complete the graph of a control file and solve along it.
    Complete {
        control_file: PathBuf,
        /// Built-in field set, e.g. `brockett` or `scalar-jump`.
        fields_id: String,
        /// `straight`, `two-leg`, `whitney` or `file:<path>` (a JSON list of points).
        #[arg(long, default_value = "whitney")]
        bridge: String,
        /// Keep the parameter speed as built instead of normalizing it to 1.
        #[arg(long)]
        no_normalize: bool,
        /// Run the graph at this parameter speed in (0, 1] before solving.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long)]
        steps: Option<usize>,
        /// Number of output grid points.
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List the built-in scenarios.
    List,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

/// What a `run` invocation was asked to do.
#[derive(Serialize)]
struct RunManifest {
    scenario: String,
    ks: Vec<u32>,
    steps: usize,
    out: PathBuf,
    format: Format,
    seed: u64,
}

/// Input of `complete`: the control and optional data.
#[derive(Deserialize)]
struct ControlFile {
    u: ControlPathJson,
    #[serde(default)]
    v: Option<OrdinaryControlJson>,
    #[serde(default)]
    x0: Option<Vec<f64>>,
    #[serde(default)]
    u_set: Option<ControlSet>,
    /// Constant `ψ` per jump fiber.
    #[serde(default)]
    fiber_controls: Vec<Option<Vec<f64>>>,
}

/// Exit status 1 for numeric failures, 2 for bad input.
enum Failure {
    Numeric(anyhow::Error),
    Usage(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } | Error::Degenerate | Error::GridMismatch | Error::WhitneyViolation { .. } => {
                Failure::Numeric(e.into())
            }
            other => Failure::Usage(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { id, ks, steps, out, format } => cmd_run(&id, ks, steps, &out, format),
        Command::Complete { control_file, fields_id, bridge, no_normalize, speed, steps, grid, out } => {
            cmd_complete(&control_file, &fields_id, &bridge, no_normalize, speed, steps, grid, &out)
        }
        Command::List => {
            for s in builtin_scenarios() {
                let tag = if s.synthetic { " (synthetic)" } else { "" };
                println!("{:<18} {}{}", s.id, s.description, tag);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn seed() -> Result<u64, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(s) => s.trim().parse().with_context(|| format!("{SEED_VAR} must be an unsigned integer")).map_err(Failure::Usage),
        Err(_) => Ok(0),
    }
}

fn config(steps: Option<usize>) -> Result<IntegratorConfig, Failure> {
    match steps {
        Some(0) => Err(Failure::Usage(anyhow!("--steps must be at least 1"))),
        Some(n) => Ok(IntegratorConfig::with_steps(n)),
        None => Ok(IntegratorConfig::default()),
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display())).map_err(Failure::Usage)
}

fn trajectory_json(x: &Trajectory) -> serde_json::Value {
    let states: Vec<&[f64]> = (0..x.len()).map(|i| x.state(i)).collect();
    let jumps: Vec<_> = x
        .jumps
        .iter()
        .map(|j| serde_json::json!({ "t": j.t, "left": j.left, "right": j.right }))
        .collect();
    serde_json::json!({ "t": x.times(), "x": states, "jumps": jumps })
}

fn to_pretty(v: &impl Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn cmd_run(id: &str, ks: Option<Vec<u32>>, steps: Option<usize>, out: &Path, format: Format) -> Result<(), Failure> {
    let scenario = scenario_by_id(id)?;
    let ks = ks.unwrap_or_else(|| scenario.ks.clone());
    if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Failure::Usage(anyhow!("--ks must be positive and strictly increasing")));
    }
    let cfg = config(steps)?;
    let seed = seed()?;
    let opts = RunOptions { ks: Some(ks.clone()), config: cfg, seed };
    let outcome = run_scenario(&scenario, &opts)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let manifest = RunManifest {
        scenario: id.to_string(),
        ks,
        steps: cfg.steps_per_unit,
        out: out.to_path_buf(),
        format,
        seed,
    };
    write(out, "run_manifest.json", &to_pretty(&manifest))?;
    write(out, "scenario.json", &to_pretty(&scenario.manifest()))?;
    let sweep_name = match scenario.cost {
        impulse_gc::scenarios::CostKind::Bolza => "j_sweep",
        _ => "cost_sweep",
    };
    match format {
        Format::Csv => {
            write(out, "checks.csv", &outcome.checks_csv())?;
            for (label, x) in &outcome.trajectories {
                write(out, &format!("traj_{label}.csv"), &x.to_csv())?;
            }
            if let Some(r) = &outcome.report {
                write(out, "approx_report.csv", &r.to_csv())?;
            }
            if !outcome.gap_table.is_empty() {
                write(out, "gap_table.csv", &outcome.gap_csv())?;
            }
            if !outcome.sweep.is_empty() {
                write(out, &format!("{sweep_name}.csv"), &outcome.sweep_csv())?;
            }
        }
        Format::Json => {
            write(out, "checks.json", &to_pretty(&outcome.checks))?;
            for (label, x) in &outcome.trajectories {
                write(out, &format!("traj_{label}.json"), &to_pretty(&trajectory_json(x)))?;
            }
            if let Some(r) = &outcome.report {
                write(out, "approx_report.json", &(r.to_json() + "\n"))?;
            }
            if !outcome.gap_table.is_empty() {
                let rows: Vec<_> =
                    outcome.gap_table.iter().map(|(c, v)| serde_json::json!({ "class": c, "cost": v })).collect();
                write(out, "gap_table.json", &to_pretty(&rows))?;
            }
            if !outcome.sweep.is_empty() {
                write(out, &format!("{sweep_name}.json"), &to_pretty(&outcome.sweep))?;
            }
        }
    }

    for c in &outcome.checks {
        let mark = if c.passed { "ok  " } else { "FAIL" };
        println!("{mark} {:<26} {} (limit {})", c.name, fmt_f64(c.value), fmt_f64(c.limit));
    }
    if let Some((_, x)) = outcome.trajectories.iter().find(|(l, _)| l == "completion") {
        let end: Vec<String> = x.last().iter().map(|v| fmt_f64(*v)).collect();
        println!("endpoint x(T) = [{}]", end.join(", "));
    }
    for (class, cost) in &outcome.gap_table {
        println!("{class:<9} cost {}", fmt_f64(*cost));
    }
    if outcome.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = outcome.failures().iter().map(|c| c.name.as_str()).collect();
        Err(Failure::Numeric(anyhow!("failed checks: {}", names.join(", "))))
    }
}

fn parse_bridge(spec: &str) -> Result<BridgeChoice, Failure> {
    Ok(match spec {
        "straight" => BridgeChoice::Straight,
        "two-leg" => BridgeChoice::TwoLeg,
        "whitney" => BridgeChoice::Whitney,
        other => {
            let Some(path) = other.strip_prefix("file:") else {
                return Err(Failure::Usage(anyhow!("unknown bridge `{other}`")));
            };
            let text = fs::read_to_string(path).with_context(|| format!("reading bridge file {path}"))?;
            let points: Vec<Vec<f64>> = serde_json::from_str(&text).context("bridge file must be a JSON list of points")?;
            BridgeChoice::Custom(Bridge::new(points)?)
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_complete(
    control_file: &Path,
    fields_id: &str,
    bridge: &str,
    no_normalize: bool,
    speed: f64,
    steps: Option<usize>,
    grid_points: usize,
    out: &Path,
) -> Result<(), Failure> {
    let fields = fields_by_id(fields_id)?;
    let text = fs::read_to_string(control_file).with_context(|| format!("reading {}", control_file.display()))?;
    let doc: ControlFile = serde_json::from_str(&text).context("parsing the control file")?;
    let u = ControlPath::from_json(&doc.u)?;
    let horizon = u.horizon();
    let v = match &doc.v {
        Some(v) => OrdinaryControl::from_json(v)?,
        None => OrdinaryControl::zero(horizon, fields.v_dim())?,
    };
    let x0 = doc.x0.clone().unwrap_or_else(|| vec![0.0; fields.n()]);
    let u_set = match (&doc.u_set, scenario_by_id(fields_id)) {
        (Some(set), _) => set.clone(),
        (None, Ok(s)) => s.u_set,
        (None, Err(_)) => bail_usage("the control file needs `u_set` for these fields")?,
    };
    if !(speed > 0.0 && speed <= 1.0) {
        return Err(Failure::Usage(anyhow!("--speed must lie in (0, 1]")));
    }
    let jumps = u.jumps().len();
    let opts = CompletionOptions {
        bridges: vec![parse_bridge(bridge)?; jumps],
        fiber_controls: doc.fiber_controls.clone(),
        ..CompletionOptions::default()
    };
    let cfg = config(steps)?;
    let (mut stc, mut clock) = complete_graph(&u, &v, &u_set, &opts)?;
    if speed < 1.0 {
        let s_end = stc.horizon();
        stc = stc.reparametrize(&[0.0, s_end / speed], &[0.0, s_end])?;
        clock = clock.map_params(|s| s / speed)?;
    }
    if !no_normalize {
        let (normalized, r) = normalize_feasible(&stc)?;
        clock = clock.refine_params(stc.params())?.map_params(|s| r.forward(s))?;
        stc = normalized;
    }
    let grid = uniform_grid(horizon, grid_points);
    let (x, xi) = graph_completion_solution(&fields, &x0, &stc, &clock, &grid, &cfg)?;

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let graph = serde_json::to_string(&stc.to_json()).expect("serializable") + "\n";
    write(out, "completion.json", &graph)?;
    write(out, "clock.json", &to_pretty(&clock.to_json()))?;
    write(out, "solution.csv", &x.to_csv())?;
    write(out, "path.csv", &xi.to_csv())?;
    let mut jumps_csv = String::from("t,left,right\n");
    for j in &x.jumps {
        let fmt = |v: &[f64]| v.iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(" ");
        jumps_csv.push_str(&format!("{},{},{}\n", fmt_f64(j.t), fmt(&j.left), fmt(&j.right)));
    }
    write(out, "jumps.csv", &jumps_csv)?;
    let end: Vec<String> = x.last().iter().map(|v| fmt_f64(*v)).collect();
    println!("S = {}  feasible = {}", fmt_f64(stc.horizon()), stc.is_feasible());
    println!("endpoint x(T) = [{}]", end.join(", "));
    Ok(())
}

fn bail_usage<T>(msg: &str) -> Result<T, Failure> {
    Err(Failure::Usage(anyhow!("{msg}")))
}
