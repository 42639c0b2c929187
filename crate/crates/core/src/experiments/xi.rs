use std::time::Instant;

use serde::Serialize;

use super::records::XiRecord;
use super::{
    corridor_window, elapsed_ms, environment, run_grid, solve_from_origin, truncated_line, ExperimentKind,
    ExperimentReport, ExperimentSpec, Records, RunControl,
};
use crate::error::Result;
use crate::geometry::{transversal_deviation, Point2};
use crate::stats::{loglog_fit, mean, quantile, FitResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentRow {
    pub gamma: f64,
    /// Fraction of replicas with deviation ≤ t^γ.
    pub frequency: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiRow {
    pub t: f64,
    pub replicas: usize,
    pub median_deviation: f64,
    pub q25_deviation: f64,
    pub q75_deviation: f64,
    pub mean_deviation: f64,
    pub mean_points: f64,
    pub containment: Vec<ContainmentRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiSummary {
    pub rows: Vec<XiRow>,
    /// Log-log fit of the median deviation against t; absent when a median
    /// is zero or fewer than two grid points were completed.
    pub fit: Option<FitResult>,
    /// 95% interval for the fitted exponent.
    pub exponent_ci95: Option<(f64, f64)>,
    pub median_nondecreasing: bool,
}

pub(super) fn summarize(spec: &ExperimentSpec, records: &[XiRecord]) -> XiSummary {
    let mut rows = Vec::new();
    for &t in &spec.t_grid {
        let dev: Vec<f64> = records.iter().filter(|r| r.t == t).map(|r| r.deviation).collect();
        if dev.is_empty() {
            continue;
        }
        let pts: Vec<f64> = records.iter().filter(|r| r.t == t).map(|r| r.n_points as f64).collect();
        let m = dev.len() as f64;
        let containment = spec
            .gamma_grid
            .iter()
            .map(|&gamma| {
                let f = dev.iter().filter(|&&d| d <= t.powf(gamma)).count() as f64 / m;
                ContainmentRow {
                    gamma,
                    frequency: f,
                    stderr: (f * (1.0 - f) / m).sqrt(),
                }
            })
            .collect();
        rows.push(XiRow {
            t,
            replicas: dev.len(),
            median_deviation: quantile(&dev, 0.5),
            q25_deviation: quantile(&dev, 0.25),
            q75_deviation: quantile(&dev, 0.75),
            mean_deviation: mean(&dev),
            mean_points: mean(&pts),
            containment,
        });
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let med: Vec<f64> = rows.iter().map(|r| r.median_deviation).collect();
    let fit = loglog_fit(&ts, &med).ok();
    XiSummary {
        exponent_ci95: fit.map(|f| f.confidence_interval(rows.len(), 0.95)),
        fit,
        median_nondecreasing: med.windows(2).all(|w| w[1] >= w[0]),
        rows,
    }
}

/// Transversal deviation of point-to-line minimizers, measured over the
/// path vertices (start, collected points, terminal) against the e₁ axis.
pub fn run_xi(spec: &ExperimentSpec, control: &RunControl) -> Result<ExperimentReport> {
    let (records, truncated, windows) = run_grid(
        spec,
        control,
        ExperimentKind::Xi,
        |t| corridor_window(t, spec.c, spec.intensity, spec.box_side),
        |_, t, window, replica, seed| {
            let clock = Instant::now();
            let config = environment(spec, window, seed)?;
            let sol = solve_from_origin(spec, &config, truncated_line(t, &window)?, t, seed)?;
            let vertices = sol.path.vertices(&config)?;
            Ok(vec![XiRecord {
                experiment_id: spec.experiment_id.clone(),
                kind: ExperimentKind::Xi,
                c: spec.c,
                t,
                replica,
                derived_seed: seed,
                action: sol.action,
                length: sol.length,
                n_points: sol.n_points,
                deviation: transversal_deviation(&vertices, Point2::E1)?,
                solver_mode: sol.kind,
                wall_ms: elapsed_ms(spec, clock),
            }])
        },
    )?;
    ExperimentReport::assemble(spec, Records::Xi(records), truncated, windows)
}
