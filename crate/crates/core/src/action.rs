//! The action functional: kinetic energy minus collected Poisson points.
//!
//! A path is either a [`PathSeq`] (start, distinct configuration points,
//! terminal), whose action at time budget `s` is `L²/(2s) − N`, or a
//! [`TimedPath`] with an explicit time parametrization, whose action is
//! `Σ |Δx|²/(2Δt)` minus the number of configuration points it touches.
//! Moving at constant speed minimizes kinetic energy for fixed geometry, so
//! the two agree once the time allocation is optimal.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::environment::PointConfig;
use crate::error::{Error, Result};
use crate::geometry::{Point2, GEOM_TOL};

/// Time budget `s`, optionally written as `s = c·t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionParams {
    s: f64,
}

impl ActionParams {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time budget must be positive, got {s}"
            )));
        }
        Ok(ActionParams { s })
    }

    pub fn from_scaling(c: f64, t: f64) -> Result<Self> {
        ActionParams::new(c * t)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `L²/(2s) − n`.
    pub fn action(&self, length: f64, n: usize) -> f64 {
        length * length / (2.0 * self.s) - n as f64
    }

    /// Longest path with `n` collected points whose action does not exceed `bound`.
    pub fn max_length(&self, n: usize, bound: f64) -> f64 {
        (2.0 * self.s * (n as f64 + bound)).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSeq {
    pub start: Point2,
    /// Indices into a [`PointConfig`], pairwise distinct.
    pub interior: Vec<usize>,
    pub terminal: Point2,
}

impl PathSeq {
    pub fn new(start: Point2, interior: Vec<usize>, terminal: Point2) -> Result<Self> {
        let mut seen = BTreeSet::new();
        if let Some(&dup) = interior.iter().find(|&&k| !seen.insert(k)) {
            return Err(Error::RepeatedIndex(dup));
        }
        Ok(PathSeq {
            start,
            interior,
            terminal,
        })
    }

    pub fn straight(start: Point2, terminal: Point2) -> Self {
        PathSeq {
            start,
            interior: Vec::new(),
            terminal,
        }
    }

    pub fn n_points(&self) -> usize {
        self.interior.len()
    }

    /// `x₀, x₁, …, x_{N+1}` resolved against `config`.
    pub fn vertices(&self, config: &PointConfig) -> Result<Vec<Point2>> {
        let mut v = Vec::with_capacity(self.interior.len() + 2);
        v.push(self.start);
        for &k in &self.interior {
            v.push(config.point(k)?);
        }
        v.push(self.terminal);
        Ok(v)
    }
}

fn polyline_length(vertices: &[Point2]) -> f64 {
    vertices.windows(2).map(|w| w[0].dist(w[1])).sum()
}

pub fn path_length(path: &PathSeq, config: &PointConfig) -> Result<f64> {
    Ok(polyline_length(&path.vertices(config)?))
}

/// `L²/(2s) − N`.
pub fn path_action(path: &PathSeq, config: &PointConfig, params: &ActionParams) -> Result<f64> {
    Ok(params.action(path_length(path, config)?, path.n_points()))
}

/// A piecewise linear path with explicit vertex times on `[0, s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedPath {
    pub vertices: Vec<Point2>,
    pub times: Vec<f64>,
}

impl TimedPath {
    pub fn new(vertices: Vec<Point2>, times: Vec<f64>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptyPath);
        }
        if vertices.len() != times.len() {
            return Err(Error::InvalidParameter(format!(
                "{} vertices but {} times",
                vertices.len(),
                times.len()
            )));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::InvalidParameter(
                "times must start at 0 and be nondecreasing".into(),
            ));
        }
        Ok(TimedPath { vertices, times })
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    /// `Σ |Δx|²/(2Δt)`; zero-length segments may have zero duration.
    pub fn kinetic_energy(&self) -> Result<f64> {
        let mut energy = 0.0;
        for (segment, (v, t)) in self.vertices.windows(2).zip(self.times.windows(2)).enumerate() {
            let dx = v[0].dist(v[1]);
            let dt = t[1] - t[0];
            if dx == 0.0 {
                continue;
            }
            if dt <= 0.0 {
                return Err(Error::InfiniteEnergy { segment });
            }
            energy += dx * dx / (2.0 * dt);
        }
        Ok(energy)
    }
}

/// Constant-speed parametrization: each segment gets time in proportion to
/// its length. A path of zero length is returned as a constant path with
/// evenly spaced vertex times.
pub fn optimal_time_allocation(path: &PathSeq, config: &PointConfig, params: &ActionParams) -> Result<TimedPath> {
    let vertices = path.vertices(config)?;
    let total = polyline_length(&vertices);
    let s = params.s();
    let segments = vertices.len() - 1;
    let mut times = Vec::with_capacity(vertices.len());
    times.push(0.0);
    let mut walked = 0.0;
    for (k, w) in vertices.windows(2).enumerate() {
        walked += w[0].dist(w[1]);
        let t = if k + 1 == segments {
            s
        } else if total > 0.0 {
            (s * walked / total).min(s)
        } else {
            s * (k + 1) as f64 / segments as f64
        };
        times.push(t);
    }
    TimedPath::new(vertices, times)
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let u = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * u)
}

/// Configuration points within [`GEOM_TOL`] of the polyline, ascending.
pub fn touched_points(vertices: &[Point2], config: &PointConfig) -> BTreeSet<usize> {
    let mut touched = BTreeSet::new();
    let mut check = |a: Point2, b: Point2| {
        config.for_each_near_rect(
            a.x.min(b.x) - GEOM_TOL,
            a.x.max(b.x) + GEOM_TOL,
            a.y.min(b.y) - GEOM_TOL,
            a.y.max(b.y) + GEOM_TOL,
            |k| {
                if point_segment_distance(config.points()[k], a, b) <= GEOM_TOL {
                    touched.insert(k);
                }
            },
        );
    };
    if vertices.len() == 1 {
        check(vertices[0], vertices[0]);
    }
    for w in vertices.windows(2) {
        check(w[0], w[1]);
    }
    touched
}

/// Kinetic energy minus the number of distinct configuration points touched.
pub fn continuous_action(path: &TimedPath, config: &PointConfig) -> Result<f64> {
    let energy = path.kinetic_energy()?;
    Ok(energy - touched_points(&path.vertices, config).len() as f64)
}
