use serde::{Deserialize, Serialize};

use super::records::{AnimalRecord, Family};
use super::{ExperimentKind, ExperimentReport, ExperimentSpec, Harness, Records, RunControl};
use crate::animals::{
    bernoulli_field, field_cell_count, greedy_animal_exact, in_poisson_tail_regime, poisson_field, TailEstimate,
    DEFAULT_C_TILDE, POISSON_TAIL_CAP,
};
use crate::error::{Error, Result};
use crate::seed::derive_path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnimalTailParams {
    /// Animal size for every row except the single-cell sanity row.
    pub n: usize,
    /// Poisson rows use `λ = K²` for each odd `K` here.
    pub box_sides: Vec<i64>,
    /// Poisson rows use `y = y_factor·λ`; `e³` sits at the edge of the
    /// regime where `P(N_n > yn) ≤ e^{-yn}` is claimed.
    pub y_factor: f64,
    /// Adds `n = 1, λ = 1`, threshold 0: `P(N_1 > 0) = 1 − e^{-1}`.
    pub sanity_row: bool,
    pub epsilons: Vec<f64>,
    pub c_tilde: f64,
}

impl Default for AnimalTailParams {
    fn default() -> Self {
        AnimalTailParams {
            n: 4,
            box_sides: vec![1, 3, 5],
            y_factor: std::f64::consts::E.powi(3),
            sanity_row: true,
            epsilons: vec![0.05],
            c_tilde: DEFAULT_C_TILDE,
        }
    }
}

impl AnimalTailParams {
    pub(super) fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n == 0 || self.n > POISSON_TAIL_CAP {
            out.push(format!("animal.n must lie in 1..={POISSON_TAIL_CAP}, got {}", self.n));
        }
        if self.box_sides.iter().any(|k| *k < 1 || k % 2 == 0) {
            out.push("animal.box_sides must be positive odd integers".into());
        }
        if !(self.y_factor >= 0.0 && self.y_factor.is_finite()) {
            out.push("animal.y_factor must be finite and nonnegative".into());
        }
        if self.epsilons.iter().any(|e| !(0.0..=1.0).contains(e)) {
            out.push("animal.epsilons must lie in [0, 1]".into());
        }
        if !(self.c_tilde > 0.0 && self.c_tilde.is_finite()) {
            out.push("animal.c_tilde must be positive".into());
        }
        out
    }

    /// `(family, n, parameter, threshold, reference bound)` per row.
    fn rows(&self) -> Vec<(Family, usize, f64, f64, f64)> {
        let mut rows = Vec::new();
        let n = self.n as f64;
        for &k in &self.box_sides {
            let lambda = (k * k) as f64;
            let y = self.y_factor * lambda;
            rows.push((Family::Poisson, self.n, lambda, y * n, (-y * n).exp()));
        }
        if self.sanity_row {
            rows.push((Family::Poisson, 1, 1.0, 0.0, 1.0 - (-1f64).exp()));
        }
        let ln_n = n.ln();
        for &eps in &self.epsilons {
            rows.push((
                Family::Bernoulli,
                self.n,
                eps,
                self.c_tilde * n * eps.cbrt(),
                (-ln_n * ln_n).exp(),
            ));
        }
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnimalTailRow {
    pub family: Family,
    pub parameter: f64,
    /// `y` for Poisson rows (threshold `y·n`), `c̃` for Bernoulli rows.
    pub scale: f64,
    pub in_claimed_regime: bool,
    pub estimate: TailEstimate,
    /// Analytic reference: `e^{-yn}`, `1 − e^{-1}` for the sanity row, or
    /// `e^{-(ln n)²}`.
    pub bound: f64,
    pub consistent: bool,
    /// Mean cell value over all sampled cells (ε̂ for Bernoulli rows).
    pub cell_mean: f64,
}

pub(super) fn summarize(spec: &ExperimentSpec, records: &[AnimalRecord]) -> Result<Vec<AnimalTailRow>> {
    let p = &spec.animal;
    let mut out = Vec::new();
    for (row, (family, n, parameter, threshold, bound)) in p.rows().into_iter().enumerate() {
        let at: Vec<&AnimalRecord> = records.iter().filter(|r| r.row == row).collect();
        if at.is_empty() {
            continue;
        }
        let weights: Vec<f64> = at.iter().map(|r| r.weight).collect();
        let estimate = TailEstimate::from_samples(n, threshold, bound, &weights);
        let cells = (at.len() * field_cell_count(n)) as f64;
        let is_sanity = family == Family::Poisson && n == 1 && threshold == 0.0 && p.sanity_row;
        let consistent = if is_sanity {
            (estimate.frequency - bound).abs() <= 0.02
        } else {
            estimate.consistent_with_bound()
        };
        out.push(AnimalTailRow {
            family,
            parameter,
            scale: match family {
                Family::Poisson => threshold / n as f64,
                Family::Bernoulli => p.c_tilde,
            },
            in_claimed_regime: match family {
                Family::Poisson => in_poisson_tail_regime(threshold / n as f64, parameter),
                Family::Bernoulli => true,
            },
            estimate,
            bound,
            consistent,
            cell_mean: at.iter().map(|r| r.field_total).sum::<f64>() / cells,
        });
    }
    Ok(out)
}

/// Poisson and Bernoulli tail rows for the exact greedy animal weight.
pub fn run_animal_tail(spec: &ExperimentSpec, control: &RunControl) -> Result<ExperimentReport> {
    if spec.kind != ExperimentKind::AnimalTail {
        return Err(Error::InvalidParameter(format!(
            "spec kind {} does not match animal_tail",
            spec.kind.as_str()
        )));
    }
    spec.validate()?;
    let harness = Harness::new(control)?;
    let master = spec.master_seed.unwrap_or_default();
    let mut records = Vec::new();
    let mut truncated = false;
    for (row, (family, n, parameter, threshold, _)) in spec.animal.rows().into_iter().enumerate() {
        let (batch, cut) = harness.map(spec.replicas, |replica| {
            let seed = derive_path(master, &[row as u64, replica]);
            let field = match family {
                Family::Poisson => poisson_field(n, parameter, seed),
                Family::Bernoulli => bernoulli_field(n, parameter, seed),
            };
            Ok(AnimalRecord {
                experiment_id: spec.experiment_id.clone(),
                kind: ExperimentKind::AnimalTail,
                row,
                family,
                n,
                parameter,
                threshold,
                replica,
                derived_seed: seed,
                weight: greedy_animal_exact(&field, n)?.weight,
                field_total: field.total(),
            })
        })?;
        records.extend(batch);
        if cut {
            truncated = true;
            break;
        }
    }
    ExperimentReport::assemble(spec, Records::AnimalTail(records), truncated, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Aggregates;

    #[test]
    fn rows_and_bound_column() {
        let mut spec = ExperimentSpec::new(ExperimentKind::AnimalTail, Vec::new(), 2000, 4);
        spec.animal.epsilons = vec![0.0, 1.0];
        let report = run_animal_tail(&spec, &RunControl::with_workers(2)).unwrap();
        let Aggregates::AnimalTail { rows } = &report.aggregates else {
            panic!()
        };
        assert_eq!(rows.len(), 3 + 1 + 2);
        let lambdas: Vec<f64> = rows[..3].iter().map(|r| r.parameter).collect();
        assert_eq!(lambdas, vec![1.0, 9.0, 25.0]);
        for r in &rows[..3] {
            assert_eq!(r.estimate.exceedances, 0);
            assert_eq!(r.bound, (-r.estimate.threshold).exp());
            assert!(r.in_claimed_regime);
        }
        let sanity = &rows[3];
        assert!((sanity.estimate.frequency - (1.0 - (-1f64).exp())).abs() < 0.04);
        assert_eq!(rows[4].estimate.mean, 0.0);
        assert_eq!(rows[5].estimate.mean, 4.0);
        assert_eq!(rows[5].cell_mean, 1.0);
        let json = report.aggregates_json().unwrap();
        assert!(json.contains("\"bound\""));
    }
}
