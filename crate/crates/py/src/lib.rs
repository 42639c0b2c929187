//! Python module `fpp`: thin wrappers over `fpp_core` taking and returning
//! plain tuples, lists, dicts and JSON strings.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fpp_core::action::path_action as core_path_action;
use fpp_core::animals::{count_animals as core_count_animals, greedy_animal_exact, greedy_animal_heuristic};
use fpp_core::environment::sample_or_empty;
use fpp_core::solver::solve;
use fpp_core::{
    run_experiment as core_run_experiment, ActionParams, AnimalGrid, Error, ExperimentSpec, GeodesicProblem, PathSeq,
    Point2, PointConfig, RunControl, SeedRecord, SolveMode, SolverOptions, TargetSet, Window,
};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

type Xy = (f64, f64);

fn pt((x, y): Xy) -> Point2 {
    Point2::new(x, y)
}

/// Samples a Poisson environment on `[xmin, xmax] × [ymin, ymax]` and
/// returns its JSON document.
#[pyfunction]
fn sample_environment(xmin: f64, xmax: f64, ymin: f64, ymax: f64, intensity: f64, seed: u64) -> PyResult<String> {
    let window = Window::new(xmin, xmax, ymin, ymax).map_err(to_py)?;
    sample_or_empty(window, intensity, seed)
        .and_then(|c| c.to_json())
        .map_err(to_py)
}

/// Action minimizer from `start` to the line `x = t` (or to `segment`) in
/// the environment given as a JSON document, with speed budget `s = c·t`.
#[pyfunction]
#[pyo3(signature = (environment_json, t, c, segment=None, start=(0.0, 0.0), exact=false, seed=0))]
#[allow(clippy::too_many_arguments)]
fn solve_geodesic<'py>(
    py: Python<'py>,
    environment_json: &str,
    t: f64,
    c: f64,
    segment: Option<(Xy, Xy)>,
    start: Xy,
    exact: bool,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let env = PointConfig::from_json(environment_json).map_err(to_py)?;
    let target = match segment {
        Some((a, b)) => TargetSet::segment(pt(a), pt(b)),
        None => TargetSet::vertical_line(t),
    }
    .map_err(to_py)?;
    let options = SolverOptions {
        force_mode: if exact { SolveMode::Exact } else { SolveMode::Auto },
        heuristic_seed: seed,
        ..SolverOptions::default()
    };
    let params = ActionParams::from_scaling(c, t).map_err(to_py)?;
    let problem = GeodesicProblem::new(&env, pt(start), target, params, options).map_err(to_py)?;
    let sol = solve(&problem).map_err(to_py)?;
    let vertices: Vec<Xy> = sol
        .path
        .vertices(&env)
        .map_err(to_py)?
        .into_iter()
        .map(|p| (p.x, p.y))
        .collect();
    let out = PyDict::new(py);
    out.set_item("action", sol.action)?;
    out.set_item("length", sol.length)?;
    out.set_item("n_points", sol.n_points)?;
    out.set_item("optimal", sol.optimal)?;
    out.set_item("solver_mode", sol.kind.as_str())?;
    out.set_item("indices", sol.path.interior.clone())?;
    out.set_item("path", vertices)?;
    out.set_item("terminal", (sol.path.terminal.x, sol.path.terminal.y))?;
    Ok(out)
}

/// `L²/(2s) − N` of the path `start → points[sequence…] → terminal`.
#[pyfunction]
fn path_action(points: Vec<Xy>, sequence: Vec<usize>, start: Xy, terminal: Xy, s: f64) -> PyResult<f64> {
    let pts: Vec<Point2> = points.into_iter().map(pt).collect();
    let (lo, hi) = pts.iter().chain([pt(start), pt(terminal)].iter()).fold(
        ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |((x0, y0), (x1, y1)), p| ((x0.min(p.x), y0.min(p.y)), (x1.max(p.x), y1.max(p.y))),
    );
    let window = Window::new(lo.0 - 1.0, hi.0 + 1.0, lo.1 - 1.0, hi.1 + 1.0).map_err(to_py)?;
    let record = SeedRecord {
        seed: None,
        intensity: 0.0,
        sampled: pts.len(),
    };
    let config = PointConfig::from_points(window, pts, record).map_err(to_py)?;
    let path = PathSeq::new(pt(start), sequence, pt(terminal)).map_err(to_py)?;
    core_path_action(&path, &config, &ActionParams::new(s).map_err(to_py)?).map_err(to_py)
}

/// Number of size-`n` lattice animals containing the origin.
#[pyfunction]
fn count_animals(n: usize) -> usize {
    core_count_animals(n)
}

/// Heaviest size-`n` animal through the origin on the cell values
/// `[((i, j), value), …]`; returns `(weight, cells)`.
#[pyfunction]
#[pyo3(signature = (cells, n, exact=true, seed=0))]
fn greedy_animal(cells: Vec<((i64, i64), f64)>, n: usize, exact: bool, seed: u64) -> PyResult<(f64, Vec<(i64, i64)>)> {
    let mut grid = AnimalGrid::new();
    for (cell, v) in cells {
        grid.set(cell, v).map_err(to_py)?;
    }
    let best = if exact {
        greedy_animal_exact(&grid, n)
    } else {
        greedy_animal_heuristic(&grid, n, seed)
    }
    .map_err(to_py)?;
    Ok((best.weight, best.cells))
}

/// Runs an experiment spec (JSON text). Writes the records CSV and
/// aggregates JSON into `out_dir` when given; returns the aggregates JSON.
#[pyfunction]
#[pyo3(signature = (spec_json, out_dir=None, workers=0))]
fn run_experiment(
    py: Python<'_>,
    spec_json: &str,
    out_dir: Option<std::path::PathBuf>,
    workers: usize,
) -> PyResult<String> {
    let spec = ExperimentSpec::from_json(spec_json).map_err(to_py)?;
    py.detach(|| {
        let report = core_run_experiment(&spec, &RunControl::with_workers(workers))?;
        if let Some(dir) = &out_dir {
            report.write(dir)?;
        }
        report.aggregates_json()
    })
    .map_err(to_py)
}

#[pymodule]
fn fpp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(sample_environment, m)?)?;
    m.add_function(wrap_pyfunction!(solve_geodesic, m)?)?;
    m.add_function(wrap_pyfunction!(path_action, m)?)?;
    m.add_function(wrap_pyfunction!(count_animals, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_animal, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
