//! Monte Carlo drivers: moment tables, transversal fluctuations, variance
//! of the action difference between two congruent targets, locality probes
//! and lattice-animal tails.
//!
//! Every replica draws its randomness from `h(master_seed, t_index,
//! replica)`, so records do not depend on the worker count or scheduling.
//! Aggregates are a pure function of the records ([`aggregate`]).

mod animal_tail;
mod locality;
mod moments;
mod records;
mod variance;
mod xi;

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use animal_tail::{run_animal_tail, AnimalTailParams, AnimalTailRow};
pub use locality::{run_locality, LocalityParams, LocalitySummary, RadiusRow, GAIN_TOLERANCE};
pub use moments::{run_moments, MomentStat, MomentsRow, MomentsSummary};
pub use records::{
    is_truncated, AnimalRecord, CsvRecord, Family, LocalityRecord, MomentRecord, Probe, Records, VarianceRecord,
    XiRecord, TRUNCATION_MARKER,
};
pub use variance::{run_variance_diff, VarianceRow, VarianceSummary};
pub use xi::{run_xi, ContainmentRow, XiRow, XiSummary};

use crate::action::ActionParams;
use crate::environment::{sample_or_empty, PointConfig, SeedRecord, Window};
use crate::error::{Error, Result};
use crate::format::to_json_sig17;
use crate::geometry::{Point2, TargetSet};
use crate::seed::{derive_path, derive_seed};
use crate::solver::{solve, GeodesicProblem, PathSolution, SolverKind, SolverOptions};

/// Sub-stream of a replica seed used for the environment.
const ENV_STREAM: u64 = 0;
/// Sub-stream of a replica seed used for the heuristic's restarts.
const HEURISTIC_STREAM: u64 = 1;
/// First sub-stream of a replica seed available to experiment-specific draws.
const PROBE_STREAM: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Moments,
    Xi,
    VarianceDiff,
    Locality,
    AnimalTail,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Moments => "moments",
            ExperimentKind::Xi => "xi",
            ExperimentKind::VarianceDiff => "variance_diff",
            ExperimentKind::Locality => "locality",
            ExperimentKind::AnimalTail => "animal_tail",
        }
    }
}

fn default_id() -> String {
    "experiment".into()
}
fn default_c() -> f64 {
    0.2
}
fn default_gamma() -> f64 {
    0.55
}
fn default_gamma_prime() -> f64 {
    0.6
}
fn default_gamma_grid() -> Vec<f64> {
    vec![0.5, 0.6, 0.7, 0.8, 0.9]
}
fn default_one() -> f64 {
    1.0
}
fn default_box_side() -> i64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    #[serde(default = "default_id")]
    pub experiment_id: String,
    /// Speed scale: the time budget is `s = c·t`.
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub t_grid: Vec<f64>,
    /// Lower-bound exponent in `Var/t^{1−γ}`; must be below `gamma_prime`.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_gamma_prime")]
    pub gamma_prime: f64,
    /// Exponents at which cylinder containment frequencies are reported.
    #[serde(default = "default_gamma_grid")]
    pub gamma_grid: Vec<f64>,
    pub replicas: u64,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default = "default_one")]
    pub intensity: f64,
    /// Keep only the first `m` sampled points of each environment. The kept
    /// points are i.i.d. uniform on the window, which keeps exact solves
    /// feasible.
    #[serde(default)]
    pub base_points: Option<usize>,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Odd side `K` of the boxes used by locality probes and window margins.
    #[serde(default = "default_box_side")]
    pub box_side: i64,
    #[serde(default)]
    pub locality: LocalityParams,
    #[serde(default)]
    pub animal: AnimalTailParams,
    /// Fill the `wall_ms` column. Off by default because timings make
    /// records differ between runs.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, t_grid: Vec<f64>, replicas: u64, master_seed: u64) -> Self {
        ExperimentSpec {
            kind,
            experiment_id: default_id(),
            c: default_c(),
            t_grid,
            gamma: default_gamma(),
            gamma_prime: default_gamma_prime(),
            gamma_grid: default_gamma_grid(),
            replicas,
            master_seed: Some(master_seed),
            intensity: 1.0,
            base_points: None,
            solver: SolverOptions::default(),
            box_side: 1,
            locality: LocalityParams::default(),
            animal: AnimalTailParams::default(),
            record_wall_time: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Every validation problem, not just the first.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.experiment_id.is_empty() || self.experiment_id.contains([',', '\n', '"']) {
            out.push("experiment_id must be non-empty without commas, quotes or newlines".into());
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            out.push(format!("c must lie in (0, 1], got {}", self.c));
        }
        if self.replicas == 0 {
            out.push("replicas must be at least 1".into());
        }
        if self.master_seed.is_none() {
            out.push("master_seed is required".into());
        }
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            out.push(format!(
                "intensity must be finite and nonnegative, got {}",
                self.intensity
            ));
        }
        if self.box_side < 1 || self.box_side % 2 == 0 {
            out.push(format!(
                "box_side must be a positive odd integer, got {}",
                self.box_side
            ));
        }
        if let Err(e) = self.solver.validate() {
            out.push(format!("solver: {e}"));
        }
        if self.kind != ExperimentKind::AnimalTail {
            if self.t_grid.is_empty() {
                out.push("t_grid must not be empty".into());
            }
            if self.t_grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                out.push("t_grid entries must be positive and finite".into());
            }
            if self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
                out.push("t_grid must be strictly increasing".into());
            }
        }
        match self.kind {
            ExperimentKind::VarianceDiff => {
                if !(self.gamma_prime > 0.5 && self.gamma_prime < 1.0) {
                    out.push(format!("gamma_prime must lie in (1/2, 1), got {}", self.gamma_prime));
                }
                if !(self.gamma < self.gamma_prime) {
                    out.push(format!(
                        "gamma ({}) must be below gamma_prime ({})",
                        self.gamma, self.gamma_prime
                    ));
                }
                if self.t_grid.iter().any(|t| *t <= 1.0) {
                    out.push("variance_diff needs every t > 1".into());
                }
            }
            ExperimentKind::Xi => {
                if self.gamma_grid.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
                    out.push("gamma_grid entries must be positive".into());
                }
            }
            ExperimentKind::Locality => out.extend(self.locality.problems()),
            ExperimentKind::AnimalTail => out.extend(self.animal.problems()),
            ExperimentKind::Moments => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(problems))
        }
    }

    fn seed(&self) -> u64 {
        self.master_seed.unwrap_or_default()
    }

    /// Seed of replica `replica` at grid position `t_index`.
    pub fn replica_seed(&self, t_index: usize, replica: u64) -> u64 {
        derive_path(self.seed(), &[t_index as u64, replica])
    }
}

/// Scheduling knobs that never influence results.
#[derive(Debug, Clone, Default)]
pub struct RunControl {
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
    /// Set to stop at the next replica boundary.
    pub cancel: Arc<AtomicBool>,
    pub time_limit: Option<Duration>,
}

impl RunControl {
    pub fn with_workers(workers: usize) -> Self {
        RunControl {
            workers,
            ..RunControl::default()
        }
    }
}

pub(crate) struct Harness {
    pool: rayon::ThreadPool,
    cancel: Arc<AtomicBool>,
    deadline: Option<Instant>,
}

impl Harness {
    pub(crate) fn new(control: &RunControl) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(control.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        Ok(Harness {
            pool,
            cancel: control.cancel.clone(),
            deadline: control.time_limit.map(|d| Instant::now() + d),
        })
    }

    pub(crate) fn stopped(&self) -> bool {
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.cancel.store(true, Ordering::SeqCst);
        }
        self.cancel.load(Ordering::SeqCst)
    }

    /// Runs `f` for replicas `0..n` in parallel, in replica order. The flag
    /// is true when cancellation skipped at least one replica.
    pub(crate) fn map<R: Send>(&self, n: u64, f: impl Fn(u64) -> Result<R> + Sync) -> Result<(Vec<R>, bool)> {
        let out: Vec<Option<Result<R>>> = self.pool.install(|| {
            (0..n)
                .into_par_iter()
                .map(|r| (!self.stopped()).then(|| f(r)))
                .collect()
        });
        let truncated = out.iter().any(Option::is_none);
        let done = out.into_iter().flatten().collect::<Result<Vec<R>>>()?;
        Ok((done, truncated))
    }
}

/// Window `[−m, t+m] × [−m, m]` with `m = √(2s(N̂ + t/(2c))) + K`, where
/// `N̂ = intensity·t` is the expected number of points in a unit-width
/// corridor along the straight path.
pub fn corridor_window(t: f64, c: f64, intensity: f64, box_side: i64) -> Result<Window> {
    let s = c * t;
    let n_hat = intensity * t;
    let m = (2.0 * s * (n_hat + t / (2.0 * c))).sqrt() + box_side as f64;
    Window::new(-m, t + m, -m, m)
}

/// Grows `window` so that every point of `pts` is at least `margin` inside.
fn cover(window: Window, pts: &[Point2], margin: f64) -> Result<Window> {
    let mut w = window;
    for p in pts {
        w.xmin = w.xmin.min(p.x - margin);
        w.xmax = w.xmax.max(p.x + margin);
        w.ymin = w.ymin.min(p.y - margin);
        w.ymax = w.ymax.max(p.y + margin);
    }
    Window::new(w.xmin, w.xmax, w.ymin, w.ymax)
}

/// The line `x = t` cut to the window's height.
fn truncated_line(t: f64, window: &Window) -> Result<TargetSet> {
    TargetSet::segment(Point2::new(t, window.ymin), Point2::new(t, window.ymax))
}

/// Replica environment, truncated to `base_points` if requested.
fn environment(spec: &ExperimentSpec, window: Window, seed: u64) -> Result<PointConfig> {
    let config = sample_or_empty(window, spec.intensity, derive_seed(seed, ENV_STREAM))?;
    match spec.base_points {
        Some(m) if m < config.len() => PointConfig::from_points(
            window,
            config.points()[..m].to_vec(),
            SeedRecord {
                sampled: m,
                ..config.seed_record().clone()
            },
        ),
        _ => Ok(config),
    }
}

fn solve_from_origin(
    spec: &ExperimentSpec,
    config: &PointConfig,
    target: TargetSet,
    t: f64,
    seed: u64,
) -> Result<PathSolution> {
    let options = SolverOptions {
        heuristic_seed: derive_seed(seed, HEURISTIC_STREAM),
        ..spec.solver
    };
    let problem = GeodesicProblem::new(
        config,
        Point2::ORIGIN,
        target,
        ActionParams::from_scaling(spec.c, t)?,
        options,
    )?;
    solve(&problem)
}

fn elapsed_ms(spec: &ExperimentSpec, since: Instant) -> Option<u64> {
    spec.record_wall_time.then(|| since.elapsed().as_millis() as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowInfo {
    pub t: f64,
    pub window: Window,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SolverModes {
    pub exact: u64,
    pub heuristic: u64,
}

impl SolverModes {
    fn count(kinds: impl Iterator<Item = SolverKind>) -> Self {
        let mut m = SolverModes::default();
        for k in kinds {
            if k == SolverKind::Heuristic {
                m.heuristic += 1;
            } else {
                m.exact += 1;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Aggregates {
    Moments(MomentsSummary),
    Xi(XiSummary),
    VarianceDiff(VarianceSummary),
    Locality(LocalitySummary),
    AnimalTail { rows: Vec<AnimalTailRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    #[serde(skip)]
    pub records: Records,
    pub aggregates: Aggregates,
    /// Some replicas were skipped because the run was cancelled.
    pub truncated: bool,
    /// Hard invariant failures; a non-empty list makes the CLI exit with 2.
    pub invariant_violations: Vec<String>,
    pub solver_modes: SolverModes,
    pub windows: Vec<WindowInfo>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    fn assemble(spec: &ExperimentSpec, records: Records, truncated: bool, windows: Vec<WindowInfo>) -> Result<Self> {
        let aggregates = aggregate(spec, &records)?;
        let invariant_violations = match &aggregates {
            Aggregates::Locality(s) => s.violations.clone(),
            _ => Vec::new(),
        };
        let mut notes = vec![
            "finite-t trends only; the asymptotic statements are not asserted".to_string(),
            "the t grid is user-chosen; no subsequence selection is attempted".to_string(),
        ];
        if spec.base_points.is_some() {
            notes.push("environments truncated to the first base_points sampled points".into());
        }
        if spec.kind == ExperimentKind::Xi {
            notes.push(
                "xi_hat is the log-log slope of the median vertex deviation, a finite-t proxy for the containment exponent"
                    .into(),
            );
        }
        if spec.kind == ExperimentKind::AnimalTail {
            notes.push("the Bernoulli threshold constant c_tilde is a configuration choice".into());
        }
        Ok(ExperimentReport {
            spec: spec.clone(),
            solver_modes: SolverModes::count(records.solver_kinds().into_iter()),
            records,
            aggregates,
            truncated,
            invariant_violations,
            windows,
            notes,
        })
    }

    /// The aggregates document, numbers at 17 significant digits.
    pub fn aggregates_json(&self) -> Result<String> {
        Ok(to_json_sig17(self)?)
    }

    pub fn write_records_csv(&self, path: &Path) -> Result<()> {
        self.records.write_csv(path, self.truncated)
    }

    /// Writes `<id>_records.csv` and `<id>_aggregates.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}_records.csv", self.spec.experiment_id));
        let json = dir.join(format!("{}_aggregates.json", self.spec.experiment_id));
        self.write_records_csv(&csv)?;
        std::fs::write(&json, self.aggregates_json()?)?;
        Ok((csv, json))
    }
}

/// Recomputes the aggregate tables from raw records.
pub fn aggregate(spec: &ExperimentSpec, records: &Records) -> Result<Aggregates> {
    Ok(match records {
        Records::Moments(r) => Aggregates::Moments(moments::summarize(spec, r)),
        Records::Xi(r) => Aggregates::Xi(xi::summarize(spec, r)),
        Records::VarianceDiff(r) => Aggregates::VarianceDiff(variance::summarize(spec, r)),
        Records::Locality(r) => Aggregates::Locality(locality::summarize(spec, r)),
        Records::AnimalTail(r) => Aggregates::AnimalTail {
            rows: animal_tail::summarize(spec, r)?,
        },
    })
}

/// Runs `spec` on the calling thread's schedule described by `control`.
pub fn run_experiment(spec: &ExperimentSpec, control: &RunControl) -> Result<ExperimentReport> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::Moments => run_moments(spec, control),
        ExperimentKind::Xi => run_xi(spec, control),
        ExperimentKind::VarianceDiff => run_variance_diff(spec, control),
        ExperimentKind::Locality => run_locality(spec, control),
        ExperimentKind::AnimalTail => run_animal_tail(spec, control),
    }
}

/// Shared driver for the per-`t` experiments: one parallel batch per grid
/// point, stopping after the first batch that was cut short.
fn run_grid<R: Send>(
    spec: &ExperimentSpec,
    control: &RunControl,
    expected: ExperimentKind,
    window_for: impl Fn(f64) -> Result<Window>,
    replica: impl Fn(usize, f64, Window, u64, u64) -> Result<Vec<R>> + Sync,
) -> Result<(Vec<R>, bool, Vec<WindowInfo>)> {
    if spec.kind != expected {
        return Err(Error::InvalidParameter(format!(
            "spec kind {} does not match {}",
            spec.kind.as_str(),
            expected.as_str()
        )));
    }
    spec.validate()?;
    let harness = Harness::new(control)?;
    let mut out = Vec::new();
    let mut windows = Vec::new();
    for (ti, &t) in spec.t_grid.iter().enumerate() {
        let window = window_for(t)?;
        windows.push(WindowInfo { t, window });
        let (batch, cut) = harness.map(spec.replicas, |r| replica(ti, t, window, r, spec.replica_seed(ti, r)))?;
        out.extend(batch.into_iter().flatten());
        if cut {
            return Ok((out, true, windows));
        }
    }
    Ok((out, false, windows))
}
