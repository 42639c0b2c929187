//! Per-replica CSV records. Floating-point columns are written with 17
//! significant digits; an interrupted run ends with a `#truncated` row,
//! which readers treat as a comment.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::ExperimentKind;
use crate::error::Result;
use crate::format::{ser17, ser17_opt};
use crate::solver::SolverKind;

pub const TRUNCATION_MARKER: &str = "#truncated";

/// A CSV row type with a fixed, documented column list.
pub trait CsvRecord: Serialize + DeserializeOwned {
    const COLUMNS: &'static [&'static str];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    pub experiment_id: String,
    pub kind: ExperimentKind,
    #[serde(serialize_with = "ser17")]
    pub c: f64,
    #[serde(serialize_with = "ser17")]
    pub t: f64,
    pub replica: u64,
    pub derived_seed: u64,
    #[serde(serialize_with = "ser17")]
    pub action: f64,
    #[serde(serialize_with = "ser17")]
    pub length: f64,
    pub n_points: usize,
    /// Unit squares holding a collected point.
    pub touched_squares: usize,
    /// `length / (c·t)`.
    #[serde(serialize_with = "ser17")]
    pub speed: f64,
    pub solver_mode: SolverKind,
    pub wall_ms: Option<u64>,
}

impl CsvRecord for MomentRecord {
    const COLUMNS: &'static [&'static str] = &[
        "experiment_id",
        "kind",
        "c",
        "t",
        "replica",
        "derived_seed",
        "action",
        "length",
        "n_points",
        "touched_squares",
        "speed",
        "solver_mode",
        "wall_ms",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiRecord {
    pub experiment_id: String,
    pub kind: ExperimentKind,
    #[serde(serialize_with = "ser17")]
    pub c: f64,
    #[serde(serialize_with = "ser17")]
    pub t: f64,
    pub replica: u64,
    pub derived_seed: u64,
    #[serde(serialize_with = "ser17")]
    pub action: f64,
    #[serde(serialize_with = "ser17")]
    pub length: f64,
    pub n_points: usize,
    /// Largest distance of a path vertex from the e₁ axis.
    #[serde(serialize_with = "ser17")]
    pub deviation: f64,
    pub solver_mode: SolverKind,
    pub wall_ms: Option<u64>,
}

impl CsvRecord for XiRecord {
    const COLUMNS: &'static [&'static str] = &[
        "experiment_id",
        "kind",
        "c",
        "t",
        "replica",
        "derived_seed",
        "action",
        "length",
        "n_points",
        "deviation",
        "solver_mode",
        "wall_ms",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRecord {
    pub experiment_id: String,
    pub kind: ExperimentKind,
    #[serde(serialize_with = "ser17")]
    pub c: f64,
    #[serde(serialize_with = "ser17")]
    pub t: f64,
    pub replica: u64,
    pub derived_seed: u64,
    /// Optimal action to `S(t)`.
    #[serde(serialize_with = "ser17")]
    pub action: f64,
    /// Optimal action to `S'(t)` on the same environment.
    #[serde(serialize_with = "ser17")]
    pub action_prime: f64,
    #[serde(serialize_with = "ser17")]
    pub diff: f64,
    pub n_points: usize,
    pub n_points_prime: usize,
    pub solver_mode: SolverKind,
    pub wall_ms: Option<u64>,
}

impl CsvRecord for VarianceRecord {
    const COLUMNS: &'static [&'static str] = &[
        "experiment_id",
        "kind",
        "c",
        "t",
        "replica",
        "derived_seed",
        "action",
        "action_prime",
        "diff",
        "n_points",
        "n_points_prime",
        "solver_mode",
        "wall_ms",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// `inserted` uniform points in a box met by the minimizer.
    Box,
    /// One point within `radius` of a collected point.
    Radius,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityRecord {
    pub experiment_id: String,
    pub kind: ExperimentKind,
    #[serde(serialize_with = "ser17")]
    pub c: f64,
    #[serde(serialize_with = "ser17")]
    pub t: f64,
    pub replica: u64,
    pub derived_seed: u64,
    pub trial: u64,
    pub probe: Probe,
    pub inserted: usize,
    #[serde(serialize_with = "ser17_opt")]
    pub radius: Option<f64>,
    #[serde(serialize_with = "ser17")]
    pub action_before: f64,
    #[serde(serialize_with = "ser17")]
    pub action_after: f64,
    /// `action_before − action_after`.
    #[serde(serialize_with = "ser17")]
    pub gain: f64,
    pub n_points: usize,
    /// Heuristic if either solve was heuristic.
    pub solver_mode: SolverKind,
    pub wall_ms: Option<u64>,
}

impl CsvRecord for LocalityRecord {
    const COLUMNS: &'static [&'static str] = &[
        "experiment_id",
        "kind",
        "c",
        "t",
        "replica",
        "derived_seed",
        "trial",
        "probe",
        "inserted",
        "radius",
        "action_before",
        "action_after",
        "gain",
        "n_points",
        "solver_mode",
        "wall_ms",
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Poisson,
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimalRecord {
    pub experiment_id: String,
    pub kind: ExperimentKind,
    /// Index of the parameter row.
    pub row: usize,
    pub family: Family,
    pub n: usize,
    /// λ for Poisson rows, ε for Bernoulli rows.
    #[serde(serialize_with = "ser17")]
    pub parameter: f64,
    #[serde(serialize_with = "ser17")]
    pub threshold: f64,
    pub replica: u64,
    pub derived_seed: u64,
    /// Exact greedy animal weight `N_n`.
    #[serde(serialize_with = "ser17")]
    pub weight: f64,
    /// Sum of the field over every sampled cell.
    #[serde(serialize_with = "ser17")]
    pub field_total: f64,
}

impl CsvRecord for AnimalRecord {
    const COLUMNS: &'static [&'static str] = &[
        "experiment_id",
        "kind",
        "row",
        "family",
        "n",
        "parameter",
        "threshold",
        "replica",
        "derived_seed",
        "weight",
        "field_total",
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub enum Records {
    Moments(Vec<MomentRecord>),
    Xi(Vec<XiRecord>),
    VarianceDiff(Vec<VarianceRecord>),
    Locality(Vec<LocalityRecord>),
    AnimalTail(Vec<AnimalRecord>),
}

fn write_rows<R: CsvRecord>(path: &Path, rows: &[R], truncated: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(R::COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    if truncated {
        let mut marker = vec![""; R::COLUMNS.len()];
        marker[0] = TRUNCATION_MARKER;
        w.write_record(&marker)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: CsvRecord>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<R>, _>>()?)
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Moments(v) => v.len(),
            Records::Xi(v) => v.len(),
            Records::VarianceDiff(v) => v.len(),
            Records::Locality(v) => v.len(),
            Records::AnimalTail(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ExperimentKind {
        match self {
            Records::Moments(_) => ExperimentKind::Moments,
            Records::Xi(_) => ExperimentKind::Xi,
            Records::VarianceDiff(_) => ExperimentKind::VarianceDiff,
            Records::Locality(_) => ExperimentKind::Locality,
            Records::AnimalTail(_) => ExperimentKind::AnimalTail,
        }
    }

    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Records::Moments(_) => MomentRecord::COLUMNS,
            Records::Xi(_) => XiRecord::COLUMNS,
            Records::VarianceDiff(_) => VarianceRecord::COLUMNS,
            Records::Locality(_) => LocalityRecord::COLUMNS,
            Records::AnimalTail(_) => AnimalRecord::COLUMNS,
        }
    }

    pub(crate) fn solver_kinds(&self) -> Vec<SolverKind> {
        match self {
            Records::Moments(v) => v.iter().map(|r| r.solver_mode).collect(),
            Records::Xi(v) => v.iter().map(|r| r.solver_mode).collect(),
            Records::VarianceDiff(v) => v.iter().map(|r| r.solver_mode).collect(),
            Records::Locality(v) => v.iter().map(|r| r.solver_mode).collect(),
            Records::AnimalTail(_) => Vec::new(),
        }
    }

    pub fn write_csv(&self, path: &Path, truncated: bool) -> Result<()> {
        match self {
            Records::Moments(v) => write_rows(path, v, truncated),
            Records::Xi(v) => write_rows(path, v, truncated),
            Records::VarianceDiff(v) => write_rows(path, v, truncated),
            Records::Locality(v) => write_rows(path, v, truncated),
            Records::AnimalTail(v) => write_rows(path, v, truncated),
        }
    }

    /// Reads records written by [`Records::write_csv`]; the marker row is skipped.
    pub fn read_csv(kind: ExperimentKind, path: &Path) -> Result<Self> {
        Ok(match kind {
            ExperimentKind::Moments => Records::Moments(read_rows(path)?),
            ExperimentKind::Xi => Records::Xi(read_rows(path)?),
            ExperimentKind::VarianceDiff => Records::VarianceDiff(read_rows(path)?),
            ExperimentKind::Locality => Records::Locality(read_rows(path)?),
            ExperimentKind::AnimalTail => Records::AnimalTail(read_rows(path)?),
        })
    }
}

/// Whether a records file ends with the truncation marker.
pub fn is_truncated(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path)?;
    Ok(text.lines().last().is_some_and(|l| l.starts_with(TRUNCATION_MARKER)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xi(replica: u64) -> XiRecord {
        XiRecord {
            experiment_id: "e".into(),
            kind: ExperimentKind::Xi,
            c: 0.2,
            t: 8.0,
            replica,
            derived_seed: 99,
            action: -1.0 / 3.0,
            length: 8.5,
            n_points: 3,
            deviation: 0.1,
            solver_mode: SolverKind::Exact,
            wall_ms: None,
        }
    }

    fn header_of<R: CsvRecord>(row: &R) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(row).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        text.lines().next().unwrap().to_string()
    }

    #[test]
    fn column_lists_match_fields() {
        assert_eq!(header_of(&xi(0)), XiRecord::COLUMNS.join(","));
        let m = MomentRecord {
            experiment_id: "e".into(),
            kind: ExperimentKind::Moments,
            c: 1.0,
            t: 1.0,
            replica: 0,
            derived_seed: 0,
            action: 0.0,
            length: 0.0,
            n_points: 0,
            touched_squares: 0,
            speed: 0.0,
            solver_mode: SolverKind::Heuristic,
            wall_ms: Some(3),
        };
        assert_eq!(header_of(&m), MomentRecord::COLUMNS.join(","));
        let v = VarianceRecord {
            experiment_id: "e".into(),
            kind: ExperimentKind::VarianceDiff,
            c: 1.0,
            t: 2.0,
            replica: 0,
            derived_seed: 0,
            action: 0.0,
            action_prime: 0.0,
            diff: 0.0,
            n_points: 0,
            n_points_prime: 0,
            solver_mode: SolverKind::Exact,
            wall_ms: None,
        };
        assert_eq!(header_of(&v), VarianceRecord::COLUMNS.join(","));
        let l = LocalityRecord {
            experiment_id: "e".into(),
            kind: ExperimentKind::Locality,
            c: 1.0,
            t: 2.0,
            replica: 0,
            derived_seed: 0,
            trial: 0,
            probe: Probe::Radius,
            inserted: 1,
            radius: Some(0.5),
            action_before: 0.0,
            action_after: 0.0,
            gain: 0.0,
            n_points: 0,
            solver_mode: SolverKind::Exact,
            wall_ms: None,
        };
        assert_eq!(header_of(&l), LocalityRecord::COLUMNS.join(","));
        let a = AnimalRecord {
            experiment_id: "e".into(),
            kind: ExperimentKind::AnimalTail,
            row: 0,
            family: Family::Poisson,
            n: 4,
            parameter: 1.0,
            threshold: 80.0,
            replica: 0,
            derived_seed: 0,
            weight: 2.0,
            field_total: 25.0,
        };
        assert_eq!(header_of(&a), AnimalRecord::COLUMNS.join(","));
    }

    #[test]
    fn round_trip_with_marker() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let records = Records::Xi(vec![xi(0), xi(1)]);
        records.write_csv(&path, true).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("-3.3333333333333331e-1"));
        assert!(is_truncated(&path).unwrap());
        assert_eq!(Records::read_csv(ExperimentKind::Xi, &path).unwrap(), records);

        let empty = Records::Xi(Vec::new());
        empty.write_csv(&path, false).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap().trim(),
            XiRecord::COLUMNS.join(",")
        );
        assert!(!is_truncated(&path).unwrap());
    }
}
