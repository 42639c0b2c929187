use std::time::Instant;

use serde::Serialize;

use super::records::VarianceRecord;
use super::{
    corridor_window, cover, elapsed_ms, environment, run_grid, solve_from_origin, ExperimentKind, ExperimentReport,
    ExperimentSpec, Records, RunControl,
};
use crate::error::Result;
use crate::geometry::{make_variance_segments, TargetSet};
use crate::solver::SolverKind;
use crate::stats::{jackknife_variance, mean, stderr, weighted_trend, Trend};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceRow {
    pub t: f64,
    pub replicas: usize,
    pub theta: f64,
    pub mean_diff: f64,
    pub mean_diff_stderr: f64,
    pub var: f64,
    /// Jackknife standard error of `var`.
    pub var_stderr: f64,
    /// `t^{2(2γ'−1)}`.
    pub upper_scale: f64,
    pub var_over_upper: f64,
    pub var_over_upper_stderr: f64,
    /// `t^{1−γ}`.
    pub lower_scale: f64,
    pub var_over_lower: f64,
    pub var_over_lower_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceSummary {
    pub rows: Vec<VarianceRow>,
    /// Weighted slope of `var_over_upper` against `ln t`.
    pub upper_trend: Option<Trend>,
    /// Slope at most 2σ above zero (true when no trend can be fitted).
    pub upper_no_increase: bool,
    /// Every row has `|mean_diff| ≤ 3σ` (or zero spread and zero mean).
    pub mean_symmetric: bool,
}

pub(super) fn summarize(spec: &ExperimentSpec, records: &[VarianceRecord]) -> VarianceSummary {
    let mut rows = Vec::new();
    for &t in &spec.t_grid {
        let diff: Vec<f64> = records.iter().filter(|r| r.t == t).map(|r| r.diff).collect();
        if diff.is_empty() {
            continue;
        }
        let (var, var_stderr) = jackknife_variance(&diff);
        let upper_scale = t.powf(2.0 * (2.0 * spec.gamma_prime - 1.0));
        let lower_scale = t.powf(1.0 - spec.gamma);
        rows.push(VarianceRow {
            t,
            replicas: diff.len(),
            theta: t.powf(-(1.0 - spec.gamma_prime)),
            mean_diff: mean(&diff),
            mean_diff_stderr: stderr(&diff),
            var,
            var_stderr,
            upper_scale,
            var_over_upper: var / upper_scale,
            var_over_upper_stderr: var_stderr / upper_scale,
            lower_scale,
            var_over_lower: var / lower_scale,
            var_over_lower_stderr: var_stderr / lower_scale,
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.var_over_upper).collect();
    let se: Vec<f64> = rows.iter().map(|r| r.var_over_upper_stderr).collect();
    let upper_trend = weighted_trend(&x, &y, &se);
    VarianceSummary {
        upper_no_increase: upper_trend.is_none_or(|t| t.no_increase(2.0)),
        upper_trend,
        mean_symmetric: rows.iter().all(|r| {
            r.mean_diff.abs() <= 3.0 * r.mean_diff_stderr || (r.mean_diff_stderr == 0.0 && r.mean_diff == 0.0)
        }),
        rows,
    }
}

fn endpoints(target: &TargetSet) -> Vec<crate::geometry::Point2> {
    match *target {
        TargetSet::Segment { a, b } => vec![a, b],
        TargetSet::SinglePoint { p } => vec![p],
        TargetSet::Line { origin, .. } => vec![origin],
    }
}

/// Paired solves to `S(t)` and `S'(t)` on one environment per replica;
/// records `T − T'`.
pub fn run_variance_diff(spec: &ExperimentSpec, control: &RunControl) -> Result<ExperimentReport> {
    let (records, truncated, windows) = run_grid(
        spec,
        control,
        ExperimentKind::VarianceDiff,
        |t| {
            let segs = make_variance_segments(t, spec.gamma_prime)?;
            let mut ends = endpoints(&segs.s);
            ends.extend(endpoints(&segs.s_prime));
            cover(
                corridor_window(t, spec.c, spec.intensity, spec.box_side)?,
                &ends,
                spec.box_side as f64,
            )
        },
        |_, t, window, replica, seed| {
            let clock = Instant::now();
            let segs = make_variance_segments(t, spec.gamma_prime)?;
            let config = environment(spec, window, seed)?;
            let a = solve_from_origin(spec, &config, segs.s, t, seed)?;
            let b = solve_from_origin(spec, &config, segs.s_prime, t, seed)?;
            let mode = if a.kind == SolverKind::Heuristic || b.kind == SolverKind::Heuristic {
                SolverKind::Heuristic
            } else {
                a.kind
            };
            Ok(vec![VarianceRecord {
                experiment_id: spec.experiment_id.clone(),
                kind: ExperimentKind::VarianceDiff,
                c: spec.c,
                t,
                replica,
                derived_seed: seed,
                action: a.action,
                action_prime: b.action,
                diff: a.action - b.action,
                n_points: a.n_points,
                n_points_prime: b.n_points,
                solver_mode: mode,
                wall_ms: elapsed_ms(spec, clock),
            }])
        },
    )?;
    ExperimentReport::assemble(spec, Records::VarianceDiff(records), truncated, windows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Aggregates;

    #[test]
    fn empty_environment_gives_deterministic_difference() {
        let mut spec = ExperimentSpec::new(ExperimentKind::VarianceDiff, vec![4.0, 8.0], 4, 3);
        spec.intensity = 0.0;
        let report = run_variance_diff(&spec, &RunControl::with_workers(2)).unwrap();
        let Records::VarianceDiff(recs) = &report.records else {
            panic!()
        };
        for t in [4.0, 8.0] {
            let d: Vec<f64> = recs.iter().filter(|r| r.t == t).map(|r| r.diff).collect();
            assert!(d.iter().all(|x| *x == d[0]));
        }
        let Aggregates::VarianceDiff(s) = &report.aggregates else {
            panic!()
        };
        assert!(s.rows.iter().all(|r| r.var == 0.0));
        let json = report.aggregates_json().unwrap();
        for col in ["\"var\"", "var_over_upper", "var_over_lower"] {
            assert!(json.contains(col), "{col}");
        }
    }
}
