//! Locality probes. A box probe inserts `j` uniform points into the side-K
//! box around a uniformly chosen point of the minimizer's polyline; the
//! optimal action can drop by at most `j`. A radius probe inserts one point
//! uniformly in the disk of radius `r` around a collected point (a polyline
//! point when none is collected) and records whether the action drops by at
//! least ½.

use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::records::{LocalityRecord, Probe};
use super::{
    corridor_window, elapsed_ms, environment, run_grid, solve_from_origin, truncated_line, ExperimentKind,
    ExperimentReport, ExperimentSpec, Records, RunControl, PROBE_STREAM,
};
use crate::environment::{insert_points, BoxSpec, PointConfig, Window};
use crate::error::Result;
use crate::geometry::Point2;
use crate::seed::{derive_seed, rng_from_seed, Rng};
use crate::solver::{PathSolution, SolverKind};

/// Slack on the hard bound `0 ≤ g ≤ j`.
pub const GAIN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalityParams {
    /// Largest number `b` of points inserted by a box probe; each trial
    /// draws `j` uniformly from `1..=b`.
    pub max_inserted: usize,
    pub box_trials: u64,
    /// Radii of the single-point probes, one trial per radius and replica.
    pub radii: Vec<f64>,
}

impl Default for LocalityParams {
    fn default() -> Self {
        LocalityParams {
            max_inserted: 4,
            box_trials: 1,
            radii: vec![0.05, 0.1, 0.2, 0.4, 0.8, 1.6],
        }
    }
}

impl LocalityParams {
    pub(super) fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_inserted == 0 {
            out.push("locality.max_inserted must be at least 1".into());
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            out.push("locality.radii must be positive".into());
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) {
            out.push("locality.radii must be strictly increasing".into());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusRow {
    pub radius: f64,
    pub trials: usize,
    /// Trials with gain ≥ ½.
    pub hits: usize,
    pub frequency: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalitySummary {
    pub box_trials: usize,
    /// Box trials where both solves were exact; the bound is checked on these.
    pub exact_box_trials: usize,
    pub bound_holds: usize,
    /// Largest `g / j` over exact box trials.
    pub max_gain_per_point: f64,
    pub violations: Vec<String>,
    pub radius_curve: Vec<RadiusRow>,
    pub radius_curve_nonincreasing: bool,
}

fn within_bound(r: &LocalityRecord) -> bool {
    r.gain >= -GAIN_TOLERANCE && r.gain <= r.inserted as f64 + GAIN_TOLERANCE
}

pub(super) fn summarize(spec: &ExperimentSpec, records: &[LocalityRecord]) -> LocalitySummary {
    let boxes: Vec<&LocalityRecord> = records.iter().filter(|r| r.probe == Probe::Box).collect();
    let exact: Vec<&&LocalityRecord> = boxes
        .iter()
        .filter(|r| r.solver_mode != SolverKind::Heuristic)
        .collect();
    let violations = exact
        .iter()
        .filter(|r| !within_bound(r))
        .map(|r| {
            format!(
                "t={} replica={} trial={}: gain {} with {} inserted points",
                r.t, r.replica, r.trial, r.gain, r.inserted
            )
        })
        .collect::<Vec<_>>();
    let radius_curve: Vec<RadiusRow> = spec
        .locality
        .radii
        .iter()
        .map(|&radius| {
            let at: Vec<&LocalityRecord> = records
                .iter()
                .filter(|r| r.probe == Probe::Radius && r.radius == Some(radius))
                .collect();
            let hits = at.iter().filter(|r| r.gain >= 0.5).count();
            let m = at.len().max(1) as f64;
            let f = hits as f64 / m;
            RadiusRow {
                radius,
                trials: at.len(),
                hits,
                frequency: f,
                stderr: (f * (1.0 - f) / m).sqrt(),
            }
        })
        .collect();
    LocalitySummary {
        box_trials: boxes.len(),
        exact_box_trials: exact.len(),
        bound_holds: exact.len() - violations.len(),
        max_gain_per_point: exact
            .iter()
            .map(|r| r.gain / r.inserted as f64)
            .fold(f64::NEG_INFINITY, f64::max),
        radius_curve_nonincreasing: radius_curve.windows(2).all(|w| w[1].frequency <= w[0].frequency),
        radius_curve,
        violations,
    }
}

/// Point at a uniformly random arc-length position on the polyline.
fn point_on_path(vertices: &[Point2], rng: &mut Rng) -> Point2 {
    let lengths: Vec<f64> = vertices.windows(2).map(|w| w[0].dist(w[1])).collect();
    let total: f64 = lengths.iter().sum();
    if total == 0.0 {
        return vertices[0];
    }
    let mut u = rng.gen::<f64>() * total;
    for (w, &l) in vertices.windows(2).zip(&lengths) {
        if u <= l && l > 0.0 {
            return w[0] + (w[1] - w[0]) * (u / l);
        }
        u -= l;
    }
    *vertices.last().unwrap_or(&Point2::ORIGIN)
}

fn uniform_in(rng: &mut Rng, (xmin, xmax, ymin, ymax): (f64, f64, f64, f64)) -> Point2 {
    Point2::new(rng.gen_range(xmin..xmax), rng.gen_range(ymin..ymax))
}

/// Box bounds clipped to the window's interior.
fn clip(bounds: (f64, f64, f64, f64), w: &Window) -> (f64, f64, f64, f64) {
    (
        bounds.0.max(w.xmin),
        bounds.1.min(w.xmax),
        bounds.2.max(w.ymin),
        bounds.3.min(w.ymax),
    )
}

struct Probed {
    after: PathSolution,
    exact: bool,
}

fn probe(
    spec: &ExperimentSpec,
    config: &PointConfig,
    extra: &[Point2],
    t: f64,
    window: &Window,
    seed: u64,
) -> Result<Probed> {
    let grown = insert_points(config, extra)?;
    let after = solve_from_origin(spec, &grown, truncated_line(t, window)?, t, seed)?;
    Ok(Probed {
        exact: after.kind != SolverKind::Heuristic,
        after,
    })
}

/// Box and radius insertion probes around point-to-line minimizers.
pub fn run_locality(spec: &ExperimentSpec, control: &RunControl) -> Result<ExperimentReport> {
    let p = &spec.locality;
    let (records, truncated, windows) = run_grid(
        spec,
        control,
        ExperimentKind::Locality,
        |t| corridor_window(t, spec.c, spec.intensity, spec.box_side),
        |_, t, window, replica, seed| {
            let clock = Instant::now();
            let config = environment(spec, window, seed)?;
            let before = solve_from_origin(spec, &config, truncated_line(t, &window)?, t, seed)?;
            let vertices = before.path.vertices(&config)?;
            let record =
                |trial: u64, probe: Probe, inserted: usize, radius: Option<f64>, out: &Probed| LocalityRecord {
                    experiment_id: spec.experiment_id.clone(),
                    kind: ExperimentKind::Locality,
                    c: spec.c,
                    t,
                    replica,
                    derived_seed: seed,
                    trial,
                    probe,
                    inserted,
                    radius,
                    action_before: before.action,
                    action_after: out.after.action,
                    gain: before.action - out.after.action,
                    n_points: before.n_points,
                    solver_mode: if out.exact && before.kind != SolverKind::Heuristic {
                        before.kind
                    } else {
                        SolverKind::Heuristic
                    },
                    wall_ms: None,
                };
            let mut out = Vec::new();
            for trial in 0..p.box_trials {
                let mut rng = rng_from_seed(derive_seed(seed, PROBE_STREAM + trial));
                let j = rng.gen_range(1..=p.max_inserted);
                let anchor = point_on_path(&vertices, &mut rng);
                let bounds = clip(BoxSpec::containing(anchor, spec.box_side as f64)?.bounds(), &window);
                let extra: Vec<Point2> = (0..j).map(|_| uniform_in(&mut rng, bounds)).collect();
                let probed = probe(spec, &config, &extra, t, &window, seed)?;
                out.push(record(trial, Probe::Box, j, None, &probed));
            }
            for (k, &radius) in p.radii.iter().enumerate() {
                let trial = p.box_trials + k as u64;
                let mut rng = rng_from_seed(derive_seed(seed, PROBE_STREAM + trial));
                let anchor = if before.path.interior.is_empty() {
                    point_on_path(&vertices, &mut rng)
                } else {
                    let pick = before.path.interior[rng.gen_range(0..before.path.interior.len())];
                    config.points()[pick]
                };
                // Uniform in the disk, redrawn until it lands in the window.
                let z = loop {
                    let r = radius * rng.gen::<f64>().sqrt();
                    let a = rng.gen_range(0.0..std::f64::consts::TAU);
                    let z = anchor + Point2::new(r * a.cos(), r * a.sin());
                    if window.contains(z) {
                        break z;
                    }
                };
                let probed = probe(spec, &config, &[z], t, &window, seed)?;
                out.push(record(trial, Probe::Radius, 1, Some(radius), &probed));
            }
            let ms = elapsed_ms(spec, clock);
            for r in &mut out {
                r.wall_ms = ms;
            }
            Ok(out)
        },
    )?;
    ExperimentReport::assemble(spec, Records::Locality(records), truncated, windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Aggregates;

    #[test]
    fn box_probes_respect_the_bound() {
        let mut spec = ExperimentSpec::new(ExperimentKind::Locality, vec![4.0], 20, 9);
        spec.c = 0.5;
        spec.base_points = Some(8);
        spec.locality.box_trials = 2;
        let report = run_locality(&spec, &RunControl::with_workers(2)).unwrap();
        let Aggregates::Locality(s) = &report.aggregates else {
            panic!()
        };
        assert_eq!(s.box_trials, 40);
        assert_eq!(s.exact_box_trials, 40);
        assert_eq!(s.bound_holds, 40);
        assert!(report.invariant_violations.is_empty());
        assert_eq!(s.radius_curve.len(), spec.locality.radii.len());
        assert!(s.radius_curve.iter().all(|r| r.trials == 20));
    }

    #[test]
    fn polyline_sampling_stays_on_path() {
        let mut rng = rng_from_seed(1);
        let v = [Point2::ORIGIN, Point2::new(2.0, 0.0), Point2::new(2.0, 3.0)];
        for _ in 0..200 {
            let p = point_on_path(&v, &mut rng);
            assert!((p.y.abs() < 1e-15 && (0.0..=2.0).contains(&p.x)) || (p.x - 2.0).abs() < 1e-15);
        }
        assert_eq!(point_on_path(&[Point2::E1, Point2::E1], &mut rng), Point2::E1);
    }
}
