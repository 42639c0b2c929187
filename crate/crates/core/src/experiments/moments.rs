use std::time::Instant;

use serde::Serialize;

use super::records::MomentRecord;
use super::{
    corridor_window, elapsed_ms, environment, run_grid, solve_from_origin, truncated_line, ExperimentKind,
    ExperimentReport, ExperimentSpec, Records, RunControl,
};
use crate::error::Result;
use crate::solver::touched_boxes;
use crate::stats::{mean, stderr, weighted_trend, Trend};

/// `E[X^k]` with its standard error and the ratio against a bound shape.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentStat {
    pub k: u32,
    pub mean: f64,
    pub stderr: f64,
    /// `mean / scale^k` for the quantity's natural scale.
    pub ratio: f64,
}

fn moment(values: &[f64], k: u32, scale: f64) -> MomentStat {
    let powered: Vec<f64> = values.iter().map(|v| v.powi(k as i32)).collect();
    let m = mean(&powered);
    MomentStat {
        k,
        mean: m,
        stderr: stderr(&powered),
        ratio: m / scale.powi(k as i32),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentsRow {
    pub t: f64,
    pub replicas: usize,
    pub mean_action: f64,
    /// `E|A|^k`, ratio against `(t/c)^k`.
    pub abs_action: Vec<MomentStat>,
    /// `E L^{2k}`, ratio against `t^{2k}`.
    pub length: Vec<MomentStat>,
    /// `E|𝒜|^{2k}` over touched unit squares, ratio against `t^{2k}`.
    pub touched_squares: Vec<MomentStat>,
    /// `E v^k` with `v = L/(ct)`; ratio against `(1/c)^k`.
    pub speed: Vec<MomentStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentsSummary {
    pub rows: Vec<MomentsRow>,
    /// Weighted slope of `E v` against `ln t`.
    pub speed_trend: Option<Trend>,
    /// `|slope| ≤ 2σ`; true when there is too little data for a trend.
    pub speed_flat: bool,
}

pub(super) fn summarize(spec: &ExperimentSpec, records: &[MomentRecord]) -> MomentsSummary {
    let c = spec.c;
    let mut rows = Vec::new();
    for &t in &spec.t_grid {
        let at: Vec<&MomentRecord> = records.iter().filter(|r| r.t == t).collect();
        if at.is_empty() {
            continue;
        }
        let col = |f: fn(&MomentRecord) -> f64| -> Vec<f64> { at.iter().map(|r| f(r)).collect() };
        let action = col(|r| r.action);
        let abs_action = col(|r| r.action.abs());
        let length2 = col(|r| r.length * r.length);
        let touched2 = col(|r| (r.touched_squares * r.touched_squares) as f64);
        let speed = col(|r| r.speed);
        rows.push(MomentsRow {
            t,
            replicas: at.len(),
            mean_action: mean(&action),
            abs_action: (1..=4).map(|k| moment(&abs_action, k, t / c)).collect(),
            length: (1..=4).map(|k| moment(&length2, k, t * t)).collect(),
            touched_squares: (1..=4).map(|k| moment(&touched2, k, t * t)).collect(),
            speed: (1..=4).map(|k| moment(&speed, k, 1.0 / c)).collect(),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.speed[0].mean).collect();
    let se: Vec<f64> = rows.iter().map(|r| r.speed[0].stderr).collect();
    let speed_trend = weighted_trend(&x, &y, &se);
    MomentsSummary {
        rows,
        speed_flat: speed_trend.is_none_or(|t| t.flat(2.0)),
        speed_trend,
    }
}

/// Point-to-line minimizers from the origin to `x = t`: moments of the
/// action, length, touched squares and speed.
pub fn run_moments(spec: &ExperimentSpec, control: &RunControl) -> Result<ExperimentReport> {
    let (records, truncated, windows) = run_grid(
        spec,
        control,
        ExperimentKind::Moments,
        |t| corridor_window(t, spec.c, spec.intensity, spec.box_side),
        |_, t, window, replica, seed| {
            let clock = Instant::now();
            let config = environment(spec, window, seed)?;
            let sol = solve_from_origin(spec, &config, truncated_line(t, &window)?, t, seed)?;
            Ok(vec![MomentRecord {
                experiment_id: spec.experiment_id.clone(),
                kind: ExperimentKind::Moments,
                c: spec.c,
                t,
                replica,
                derived_seed: seed,
                action: sol.action,
                length: sol.length,
                n_points: sol.n_points,
                touched_squares: touched_boxes(&sol, &config, 1)?.len(),
                speed: sol.length / (spec.c * t),
                solver_mode: sol.kind,
                wall_ms: elapsed_ms(spec, clock),
            }])
        },
    )?;
    ExperimentReport::assemble(spec, Records::Moments(records), truncated, windows)
}
