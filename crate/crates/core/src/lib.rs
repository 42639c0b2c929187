//! Action minimizers for first passage percolation on Poisson points, and
//! the Monte Carlo experiments built on them.
//!
//! A path from `x` to a target set `S` collecting `N` points with total
//! length `L` under time budget `s` has action `L²/(2s) − N`. The modules
//! are layered: [`geometry`] and [`environment`] describe the input,
//! [`action`] evaluates paths, [`solver`] minimizes, [`animals`] handles
//! greedy lattice animals, and [`experiments`] runs the scaling studies.

// `!(x > 0.0)` is the idiom used throughout to reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod animals;
pub mod environment;
pub mod error;
pub mod experiments;
pub mod format;
pub mod geometry;
pub mod seed;
pub mod solver;
pub mod stats;

pub use action::{ActionParams, PathSeq, TimedPath};
pub use animals::{Animal, AnimalGrid, Cell};
pub use environment::{BoxSpec, PointConfig, SeedRecord, Window};
pub use error::{Error, Result};
pub use experiments::{run_experiment, ExperimentKind, ExperimentReport, ExperimentSpec, RunControl};
pub use geometry::{Point2, TargetSet};
pub use solver::{GeodesicProblem, PathSolution, SolveMode, SolverOptions};
