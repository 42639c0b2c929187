//! Action minimizers (geodesics) from a start point to a target set.
//!
//! For a fixed number `N` of collected points the action `L²/(2s) − N` is
//! strictly increasing in the length `L`. The exact solver therefore only
//! needs, for every candidate subset `T` and last point `j`, the shortest
//! path from the start through all of `T` ending at `j`: a Held–Karp
//! table over `(T, j)`. The terminal leg is always the straight segment to
//! the nearest point of the target.

mod brute;
mod exact;
mod heuristic;
mod lattice;

use serde::{Deserialize, Serialize};

pub use brute::{brute_force, BRUTE_FORCE_CAP};
pub use exact::solve_exact;
pub use heuristic::{improve_path, solve_heuristic};
pub use lattice::{touched_boxes, traced_lattice_path};

use crate::action::{ActionParams, PathSeq};
use crate::environment::PointConfig;
use crate::error::{Error, Result};
use crate::geometry::{Point2, TargetSet};

/// Hard ceiling on `max_exact_points`; the DP table has `2^m · m` entries.
pub const MAX_EXACT_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    #[default]
    Auto,
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_exact_points: usize,
    pub heuristic_restarts: u32,
    pub heuristic_seed: u64,
    pub action_tolerance: f64,
    pub force_mode: SolveMode,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_exact_points: 18,
            heuristic_restarts: 16,
            heuristic_seed: 0,
            action_tolerance: 1e-9,
            force_mode: SolveMode::Auto,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_exact_points > MAX_EXACT_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "max_exact_points {} exceeds {MAX_EXACT_LIMIT}",
                self.max_exact_points
            )));
        }
        if !(self.action_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("action_tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Which algorithm produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exact,
    BruteForce,
    Heuristic,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Exact => "exact",
            SolverKind::BruteForce => "brute_force",
            SolverKind::Heuristic => "heuristic",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverLog {
    pub states_expanded: u64,
    /// Configuration points discarded by candidate pruning.
    pub prune_hits: u64,
    pub moves_applied: u64,
    pub restarts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSolution {
    pub path: PathSeq,
    pub action: f64,
    pub length: f64,
    pub n_points: usize,
    /// True iff produced by an exhaustive method.
    pub optimal: bool,
    pub kind: SolverKind,
    pub candidates_used: usize,
    pub log: SolverLog,
}

#[derive(Debug, Clone, Copy)]
pub struct GeodesicProblem<'a> {
    pub config: &'a PointConfig,
    pub start: Point2,
    pub target: TargetSet,
    pub params: ActionParams,
    pub options: SolverOptions,
}

impl<'a> GeodesicProblem<'a> {
    pub fn new(
        config: &'a PointConfig,
        start: Point2,
        target: TargetSet,
        params: ActionParams,
        options: SolverOptions,
    ) -> Result<Self> {
        target.validate()?;
        options.validate()?;
        if !start.is_finite() {
            return Err(Error::InvalidParameter("start must be finite".into()));
        }
        Ok(GeodesicProblem {
            config,
            start,
            target,
            params,
            options,
        })
    }

    pub fn with_options(mut self, options: SolverOptions) -> Self {
        self.options = options;
        self
    }

    pub fn baseline_action(&self) -> f64 {
        baseline_action(self)
    }

    pub fn candidate_points(&self) -> Vec<usize> {
        candidate_points(self)
    }

    /// Length of the path visiting `interior` in order and finishing at the
    /// nearest target point.
    fn sequence_length(&self, interior: &[usize]) -> f64 {
        let pts = self.config.points();
        let mut len = 0.0;
        let mut at = self.start;
        for &k in interior {
            len += at.dist(pts[k]);
            at = pts[k];
        }
        len + self.target.distance(at)
    }

    fn solution(&self, interior: Vec<usize>, kind: SolverKind, candidates_used: usize, log: SolverLog) -> PathSolution {
        let last = interior.last().map_or(self.start, |&k| self.config.points()[k]);
        let (terminal, _) = self.target.closest_point(last);
        let length = self.sequence_length(&interior);
        let n_points = interior.len();
        PathSolution {
            path: PathSeq {
                start: self.start,
                interior,
                terminal,
            },
            action: self.params.action(length, n_points),
            length,
            n_points,
            optimal: kind != SolverKind::Heuristic,
            kind,
            candidates_used,
            log,
        }
    }
}

/// Action of the straight path to the nearest target point, collecting nothing.
pub fn baseline_action(problem: &GeodesicProblem) -> f64 {
    let d = problem.target.distance(problem.start);
    problem.params.action(d, 0)
}

/// Configuration points that can lie on a path with action at most the
/// baseline, ascending by index.
///
/// A path through `p` with `N` collected points has length at least
/// `k(p) = |start − p| + dist(p, target)` and at most
/// `L_max(N) = √(2s(N + baseline))`. Every collected point of such a path
/// satisfies the same inequality, so `N` cannot exceed the number of points
/// with `k ≤ L_max(N)`. The largest `N` consistent with that count bounds
/// the admissible path sizes; points beyond `L_max` of that `N` are dropped.
pub fn candidate_points(problem: &GeodesicProblem) -> Vec<usize> {
    let pts = problem.config.points();
    let baseline = baseline_action(problem);
    let mut keyed: Vec<(f64, usize)> = pts
        .iter()
        .enumerate()
        .map(|(k, &p)| (problem.start.dist(p) + problem.target.distance(p), k))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let slack = |l: f64| l * (1.0 + 1e-12) + 1e-12;
    let reach = |n: usize| slack(problem.params.max_length(n, baseline));
    let within = |limit: f64| keyed.partition_point(|&(k, _)| k <= limit);
    let n_cap = (0..=pts.len()).rev().find(|&n| within(reach(n)) >= n).unwrap_or(0);
    let mut kept: Vec<usize> = keyed[..within(reach(n_cap))].iter().map(|&(_, k)| k).collect();
    kept.sort_unstable();
    kept
}

/// Dispatch on `options.force_mode`. `Auto` solves exactly when the
/// candidates fit in `max_exact_points` and falls back to local search
/// otherwise.
pub fn solve(problem: &GeodesicProblem) -> Result<PathSolution> {
    match problem.options.force_mode {
        SolveMode::Exact => solve_exact(problem),
        SolveMode::Heuristic => solve_heuristic(problem),
        SolveMode::Auto => match solve_exact(problem) {
            Err(Error::TooManyCandidates { .. }) => solve_heuristic(problem),
            other => other,
        },
    }
}

/// Total order used to pick "the" minimizer: lower action, then fewer
/// points, then the lexicographically smaller index sequence. Actions within
/// `1e-12` relative are treated as equal.
pub(crate) fn beats(action: f64, seq: &[usize], best_action: f64, best_seq: &[usize]) -> bool {
    if best_action == f64::INFINITY {
        return true;
    }
    let tol = 1e-12 * (1.0 + best_action.abs());
    if action < best_action - tol {
        return true;
    }
    if action > best_action + tol {
        return false;
    }
    (seq.len(), seq) < (best_seq.len(), best_seq)
}
