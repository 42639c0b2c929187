use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use serde::Serialize;
use serde_json::{Map, Value};

use fpp_core::animals::{
    bernoulli_field, greedy_animal_exact, greedy_animal_heuristic, poisson_field, ENUMERATION_CAP,
};
use fpp_core::environment::sample_or_empty;
use fpp_core::format::{to_json_sig17, Sig17};
use fpp_core::seed::derive_seed;
use fpp_core::solver::{solve, SolverLog};
use fpp_core::{
    run_experiment, ActionParams, AnimalGrid, ExperimentSpec, GeodesicProblem, Point2, PointConfig, RunControl,
    SolveMode, TargetSet,
};

use crate::config::{load, parse_target, AnimalConfig, FieldFamily, GeodesicConfig, SamplingConfig};
use crate::error::{CliError, CliResult};
use crate::{AnimalArgs, Common, ExperimentArgs, GeodesicArgs, SampleArgs};

/// Sub-stream of the master seed feeding the geodesic heuristic's restarts;
/// the environment itself uses the master seed, so `sample` and `geodesic`
/// with the same seed see the same points.
const HEURISTIC_STREAM: u64 = 1;

fn require_seed(flag: Option<u64>, config: Option<u64>) -> CliResult<u64> {
    flag.or(config).ok_or(CliError::MissingSeed)
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(fpp_core::Error::from)?;
            }
            std::fs::write(path, format!("{text}\n")).map_err(fpp_core::Error::from)?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn sample_environment(sampling: &SamplingConfig, seed: u64) -> CliResult<PointConfig> {
    Ok(sample_or_empty(sampling.window()?, sampling.intensity, seed)?)
}

pub fn sample(common: &Common, args: &SampleArgs) -> CliResult<()> {
    let mut cfg: SamplingConfig = load(common.config.as_deref())?;
    cfg.t = args.t.or(cfg.t);
    cfg.c = args.c.unwrap_or(cfg.c);
    cfg.k = args.k.unwrap_or(cfg.k);
    cfg.intensity = args.intensity.unwrap_or(cfg.intensity);
    let seed = require_seed(common.seed, cfg.seed)?;
    let env = sample_environment(&cfg, seed)?;
    eprintln!("sampled {} points", env.len());
    emit(&env.to_json()?, common.out.as_deref())
}

#[derive(Serialize)]
struct GeodesicOut {
    action: Sig17,
    length: Sig17,
    n_points: usize,
    optimal: bool,
    solver_mode: &'static str,
    /// Polyline from the start through the collected points to the terminal.
    path: Vec<[Sig17; 2]>,
    /// Indices of the collected points in the environment document.
    indices: Vec<usize>,
    terminal: [Sig17; 2],
    solver_log: SolverLog,
}

fn xy(p: Point2) -> [Sig17; 2] {
    [Sig17(p.x), Sig17(p.y)]
}

pub fn geodesic(common: &Common, args: &GeodesicArgs) -> CliResult<()> {
    let mut cfg: GeodesicConfig = load(common.config.as_deref())?;
    cfg.t = args.t.or(cfg.t);
    cfg.c = args.c.unwrap_or(cfg.c);
    cfg.k = args.k.unwrap_or(cfg.k);
    cfg.intensity = args.intensity.unwrap_or(cfg.intensity);
    if args.environment.is_some() {
        cfg.environment.clone_from(&args.environment);
    }
    if args.exact {
        cfg.solver.force_mode = SolveMode::Exact;
    }
    let seed = require_seed(common.seed, cfg.seed)?;
    let t = cfg
        .t
        .ok_or_else(|| CliError::Config("t is required: the speed budget is s = c·t".into()))?;
    let target = match &cfg.target {
        Some(v) => parse_target(v)?,
        None => TargetSet::vertical_line(t)?,
    };
    let env = match &cfg.environment {
        Some(path) => PointConfig::load(path)?,
        None => sample_environment(&cfg.sampling(), seed)?,
    };
    let start = cfg.start.map_or(Point2::ORIGIN, Point2::from);
    let mut options = cfg.solver;
    options.heuristic_seed = derive_seed(seed, HEURISTIC_STREAM);
    let problem = GeodesicProblem::new(&env, start, target, ActionParams::from_scaling(cfg.c, t)?, options)?;
    let sol = solve(&problem)?;
    let mut path: Vec<[Sig17; 2]> = vec![xy(sol.path.start)];
    path.extend(sol.path.interior.iter().map(|&k| xy(env.points()[k])));
    path.push(xy(sol.path.terminal));
    let out = GeodesicOut {
        action: Sig17(sol.action),
        length: Sig17(sol.length),
        n_points: sol.n_points,
        optimal: sol.optimal,
        solver_mode: sol.kind.as_str(),
        path,
        indices: sol.path.interior.clone(),
        terminal: xy(sol.path.terminal),
        solver_log: sol.log,
    };
    emit(
        &to_json_sig17(&out).map_err(fpp_core::Error::from)?,
        common.out.as_deref(),
    )
}

#[derive(Serialize)]
struct AnimalOut {
    n: usize,
    weight: Sig17,
    exact: bool,
    cells: Vec<[i64; 2]>,
    field_total: Sig17,
}

pub fn animal(common: &Common, args: &AnimalArgs) -> CliResult<()> {
    let mut cfg: AnimalConfig = load(common.config.as_deref())?;
    cfg.n = args.n.unwrap_or(cfg.n);
    cfg.k = args.k.unwrap_or(cfg.k);
    cfg.family = args.family.unwrap_or(cfg.family);
    cfg.parameter = args.parameter.or(cfg.parameter);
    if args.exact {
        cfg.exact = Some(true);
    }
    if args.grid.is_some() {
        cfg.grid.clone_from(&args.grid);
    }
    let seed = require_seed(common.seed, cfg.seed)?;
    if cfg.k < 1 || cfg.k % 2 == 0 {
        return Err(fpp_core::Error::BadBoxSize(cfg.k).into());
    }
    let grid = match &cfg.grid {
        Some(path) => AnimalGrid::load(path)?,
        None => match cfg.family {
            FieldFamily::Poisson => poisson_field(cfg.n, cfg.parameter.unwrap_or((cfg.k * cfg.k) as f64), seed),
            FieldFamily::Bernoulli => {
                let eps = cfg
                    .parameter
                    .ok_or_else(|| CliError::Config("a Bernoulli field needs `parameter` (ε in [0, 1])".into()))?;
                if !(0.0..=1.0).contains(&eps) {
                    return Err(CliError::Config(format!("ε must lie in [0, 1], got {eps}")));
                }
                bernoulli_field(cfg.n, eps, seed)
            }
        },
    };
    let exact = cfg.exact.unwrap_or(cfg.n <= ENUMERATION_CAP);
    let best = if exact {
        greedy_animal_exact(&grid, cfg.n)?
    } else {
        greedy_animal_heuristic(&grid, cfg.n, derive_seed(seed, HEURISTIC_STREAM))?
    };
    let out = AnimalOut {
        n: cfg.n,
        weight: Sig17(best.weight),
        exact,
        cells: best.cells.iter().map(|&(i, j)| [i, j]).collect(),
        field_total: Sig17(grid.total()),
    };
    emit(
        &to_json_sig17(&out).map_err(fpp_core::Error::from)?,
        common.out.as_deref(),
    )
}

/// Merges flag overrides into the JSON spec before parsing, so unknown and
/// missing fields are reported by the same parser that reads spec files.
fn experiment_spec(common: &Common, args: &ExperimentArgs) -> CliResult<ExperimentSpec> {
    let mut doc = match &common.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => Value::Object(Map::new()),
    };
    let obj = doc
        .as_object_mut()
        .ok_or_else(|| CliError::Config("the experiment spec must be a JSON object".into()))?;
    let mut set = |key: &str, v: Value| {
        obj.insert(key.to_string(), v);
    };
    if let Some(kind) = &args.kind {
        set("kind", Value::from(kind.as_str()));
    }
    if let Some(id) = &args.id {
        set("experiment_id", Value::from(id.as_str()));
    }
    if !args.t.is_empty() {
        set("t_grid", Value::from(args.t.clone()));
    }
    if let Some(c) = args.c {
        set("c", Value::from(c));
    }
    if let Some(g) = args.gamma_prime {
        set("gamma_prime", Value::from(g));
    }
    if let Some(r) = args.replicas {
        set("replicas", Value::from(r));
    }
    if let Some(k) = args.k {
        set("box_side", Value::from(k));
    }
    if let Some(i) = args.intensity {
        set("intensity", Value::from(i));
    }
    if let Some(seed) = common.seed {
        set("master_seed", Value::from(seed));
    }
    if args.exact {
        let solver = obj.entry("solver").or_insert_with(|| Value::Object(Map::new()));
        let solver = solver
            .as_object_mut()
            .ok_or_else(|| CliError::Config("`solver` must be a JSON object".into()))?;
        solver.insert("force_mode".into(), Value::from("exact"));
    }
    let spec: ExperimentSpec =
        serde_json::from_value(doc).map_err(|e| CliError::Config(format!("experiment spec: {e}")))?;
    if spec.master_seed.is_none() {
        return Err(CliError::MissingSeed);
    }
    spec.validate()?;
    Ok(spec)
}

pub fn experiment(
    common: &Common,
    args: &ExperimentArgs,
    control: RunControl,
    interrupted: &AtomicBool,
) -> CliResult<()> {
    let spec = experiment_spec(common, args)?;
    let control = RunControl {
        time_limit: args.time_limit.map(Duration::from_secs_f64),
        ..control
    };
    let report = run_experiment(&spec, &control)?;
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let (csv, json) = report.write(&dir)?;
    eprintln!(
        "{}: {} records ({} exact, {} heuristic) -> {}, {}",
        spec.kind.as_str(),
        report.records.len(),
        report.solver_modes.exact,
        report.solver_modes.heuristic,
        csv.display(),
        json.display()
    );
    for v in &report.invariant_violations {
        eprintln!("invariant violation: {v}");
    }
    if report.truncated {
        if interrupted.load(Ordering::SeqCst) {
            return Err(CliError::Interrupted);
        }
        eprintln!("time limit reached; records are partial and end with a truncation marker");
    }
    if !report.invariant_violations.is_empty() {
        return Err(CliError::Invariant(report.invariant_violations.len()));
    }
    Ok(())
}
