//! Planar primitives: points, rotations, target sets and the paired
//! segments used by the action-difference experiment.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for every geometric comparison in the crate.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };
    pub const E1: Point2 = Point2 { x: 1.0, y: 0.0 };
    pub const E2: Point2 = Point2 { x: 0.0, y: 1.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise normal.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn rotate(self, theta: f64) -> Point2 {
        rotate(self, theta)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2::new(x, y)
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Counter-clockwise rotation about the origin.
pub fn rotate(p: Point2, theta: f64) -> Point2 {
    let (sin, cos) = theta.sin_cos();
    Point2::new(p.x * cos - p.y * sin, p.x * sin + p.y * cos)
}

fn check_unit(direction: Point2) -> Result<()> {
    if !direction.is_finite() || (direction.norm() - 1.0).abs() > GEOM_TOL {
        return Err(Error::BadTarget(format!(
            "direction ({}, {}) is not a unit vector",
            direction.x, direction.y
        )));
    }
    Ok(())
}

/// The set a path has to end on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSet {
    SinglePoint { p: Point2 },
    Segment { a: Point2, b: Point2 },
    Line { origin: Point2, direction: Point2 },
}

impl TargetSet {
    pub fn point(p: Point2) -> Result<Self> {
        let t = TargetSet::SinglePoint { p };
        t.validate()?;
        Ok(t)
    }

    pub fn segment(a: Point2, b: Point2) -> Result<Self> {
        let t = TargetSet::Segment { a, b };
        t.validate()?;
        Ok(t)
    }

    /// Line through `origin`; `direction` is normalized here.
    pub fn line(origin: Point2, direction: Point2) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::BadTarget("line direction must be nonzero".into()));
        }
        let t = TargetSet::Line {
            origin,
            direction: direction * (1.0 / n),
        };
        t.validate()?;
        Ok(t)
    }

    /// The vertical line `x = t`, i.e. the line at distance `t` from the
    /// origin perpendicular to e₁.
    pub fn vertical_line(t: f64) -> Result<Self> {
        TargetSet::line(Point2::new(t, 0.0), Point2::E2)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TargetSet::SinglePoint { p } => {
                if !p.is_finite() {
                    return Err(Error::BadTarget("non-finite point".into()));
                }
            }
            TargetSet::Segment { a, b } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::BadTarget("non-finite segment endpoint".into()));
                }
                if a.dist(b) <= GEOM_TOL {
                    return Err(Error::BadTarget("segment endpoints coincide".into()));
                }
            }
            TargetSet::Line { origin, direction } => {
                if !origin.is_finite() {
                    return Err(Error::BadTarget("non-finite line origin".into()));
                }
                check_unit(direction)?;
            }
        }
        Ok(())
    }

    pub fn closest_point(&self, p: Point2) -> (Point2, f64) {
        closest_point(self, p)
    }

    pub fn distance(&self, p: Point2) -> f64 {
        closest_point(self, p).1
    }

    pub fn rotate(&self, theta: f64) -> TargetSet {
        match *self {
            TargetSet::SinglePoint { p } => TargetSet::SinglePoint { p: rotate(p, theta) },
            TargetSet::Segment { a, b } => TargetSet::Segment {
                a: rotate(a, theta),
                b: rotate(b, theta),
            },
            TargetSet::Line { origin, direction } => TargetSet::Line {
                origin: rotate(origin, theta),
                direction: rotate(direction, theta),
            },
        }
    }

    /// Restrict a line to the segment of half-length `half_length` centred at
    /// the foot of the perpendicular from `anchor`. Other targets pass through.
    pub fn truncate(&self, anchor: Point2, half_length: f64) -> Result<TargetSet> {
        match *self {
            TargetSet::Line { direction, .. } => {
                let (foot, _) = self.closest_point(anchor);
                TargetSet::segment(foot - direction * half_length, foot + direction * half_length)
            }
            other => Ok(other),
        }
    }
}

/// Nearest point of `target` to `p` and the distance to it.
pub fn closest_point(target: &TargetSet, p: Point2) -> (Point2, f64) {
    let q = match *target {
        TargetSet::SinglePoint { p: q } => q,
        TargetSet::Segment { a, b } => {
            let ab = b - a;
            let u = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
            if u == 0.0 {
                a
            } else if u == 1.0 {
                b
            } else {
                a + ab * u
            }
        }
        TargetSet::Line { origin, direction } => origin + direction * (p - origin).dot(direction),
    };
    (q, p.dist(q))
}

/// Infinite strip of half-width `half_width` around the line through the
/// origin with the given direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    direction: Point2,
    half_width: f64,
}

impl Cylinder {
    pub fn new(direction: Point2, half_width: f64) -> Result<Self> {
        check_unit(direction)?;
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cylinder half-width must be positive, got {half_width}"
            )));
        }
        Ok(Cylinder { direction, half_width })
    }

    pub fn direction(&self) -> Point2 {
        self.direction
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.dot(self.direction.perp()).abs() <= self.half_width
    }
}

/// Smallest half-width `w` such that every point lies in the cylinder of
/// half-width `w` around `direction`.
pub fn transversal_deviation(points: &[Point2], direction: Point2) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyPath);
    }
    let normal = direction.perp();
    Ok(points.iter().map(|p| p.dot(normal).abs()).fold(0.0, f64::max))
}

/// The two target segments at distance `t` and the angle between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceSegments {
    pub s: TargetSet,
    pub s_prime: TargetSet,
    pub theta: f64,
}

/// Build `S(t)` (perpendicular to e₁ at distance `t`, offset upward by
/// `t^γ'/2`) and `S'(t)`, the mirrored offset rotated by `θ = t^{-(1-γ')}`.
/// The pair is congruent under rotation by θ composed with reflection of the
/// offset interval, so the two point-to-segment actions share a law.
pub fn make_variance_segments(t: f64, gamma_prime: f64) -> Result<VarianceSegments> {
    if !(gamma_prime > 0.5 && gamma_prime < 1.0) {
        return Err(Error::BadExponent(gamma_prime));
    }
    if !(t > 1.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t must exceed 1, got {t}")));
    }
    let width = t.powf(gamma_prime);
    let theta = t.powf(-(1.0 - gamma_prime));
    let base = Point2::new(t, 0.0);
    let s = TargetSet::segment(base + Point2::E2 * (-0.5 * width), base + Point2::E2 * (1.5 * width))?;
    let s_prime = TargetSet::segment(
        rotate(base + Point2::E2 * (-1.5 * width), theta),
        rotate(base + Point2::E2 * (0.5 * width), theta),
    )?;
    Ok(VarianceSegments { s, s_prime, theta })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;

    fn close(a: Point2, b: Point2, tol: f64) -> bool {
        a.dist(b) <= tol
    }

    #[test]
    fn rotate_examples() {
        assert!(close(
            rotate(Point2::new(1.0, 0.0), PI / 2.0),
            Point2::new(0.0, 1.0),
            1e-15
        ));
        assert_eq!(rotate(Point2::ORIGIN, 1.234), Point2::ORIGIN);
        assert!(close(rotate(Point2::new(1.0, 1.0), PI), Point2::new(-1.0, -1.0), 1e-15));
    }

    #[test]
    fn closest_point_examples() {
        let line = TargetSet::line(Point2::new(2.0, 0.0), Point2::E2).unwrap();
        let (q, d) = line.closest_point(Point2::ORIGIN);
        assert!(close(q, Point2::new(2.0, 0.0), 1e-15));
        assert!((d - 2.0).abs() < 1e-15);

        let seg = TargetSet::segment(Point2::new(2.0, -1.0), Point2::new(2.0, 0.0)).unwrap();
        let (q, d) = seg.closest_point(Point2::new(1.0, 1.0));
        assert_eq!(q, Point2::new(2.0, 0.0));
        assert!((d - 2f64.sqrt()).abs() < 1e-15);

        let pt = TargetSet::point(Point2::new(3.0, 4.0)).unwrap();
        assert_eq!(pt.closest_point(Point2::ORIGIN), (Point2::new(3.0, 4.0), 5.0));
    }

    #[test]
    fn target_validation() {
        assert!(TargetSet::segment(Point2::ORIGIN, Point2::ORIGIN).is_err());
        assert!(TargetSet::line(Point2::ORIGIN, Point2::ORIGIN).is_err());
        let raw = TargetSet::Line {
            origin: Point2::ORIGIN,
            direction: Point2::new(2.0, 0.0),
        };
        assert!(raw.validate().is_err());
        assert!(Cylinder::new(Point2::E1, 0.0).is_err());
    }

    #[test]
    fn transversal_deviation_examples() {
        let d = |pts: &[(f64, f64)], dir: Point2| {
            let pts: Vec<_> = pts.iter().map(|&(x, y)| Point2::new(x, y)).collect();
            transversal_deviation(&pts, dir).unwrap()
        };
        assert_eq!(d(&[(0.0, 0.0), (5.0, 0.0)], Point2::E1), 0.0);
        assert_eq!(d(&[(1.0, 2.0), (3.0, -7.0)], Point2::E1), 7.0);
        assert_eq!(d(&[(0.0, 0.0), (1.0, 1.0)], Point2::E2), 1.0);
        assert!(matches!(transversal_deviation(&[], Point2::E1), Err(Error::EmptyPath)));
    }

    #[test]
    fn deviation_matches_cylinder_membership() {
        let pts = [Point2::new(1.0, 2.0), Point2::new(3.0, -7.0)];
        let w = transversal_deviation(&pts, Point2::E1).unwrap();
        let cyl = Cylinder::new(Point2::E1, w).unwrap();
        assert!(pts.iter().all(|&p| cyl.contains(p)));
        let tighter = Cylinder::new(Point2::E1, w - 1e-9).unwrap();
        assert!(!pts.iter().all(|&p| tighter.contains(p)));
    }

    #[test]
    fn variance_segments_t16() {
        let vs = make_variance_segments(16.0, 0.6).unwrap();
        assert!((vs.theta - 16f64.powf(-0.4)).abs() < 1e-15);
        assert!((vs.theta - 0.32988).abs() < 1e-5);
        let TargetSet::Segment { a, b } = vs.s else {
            panic!("S must be a segment")
        };
        assert!(close(a, Point2::new(16.0, -2.6390), 1e-4));
        assert!(close(b, Point2::new(16.0, 7.9170), 1e-4));
    }

    #[test]
    fn variance_segments_offsets_and_lengths() {
        for &t in &[4.0, 100.0, 777.0] {
            let vs = make_variance_segments(t, 0.6).unwrap();
            let w = t.powf(0.6);
            let (TargetSet::Segment { a, b }, TargetSet::Segment { a: a2, b: b2 }) = (vs.s, vs.s_prime) else {
                panic!("segments expected")
            };
            let mid = (a + b) * 0.5;
            assert!((mid.y - w / 2.0).abs() < 1e-9 * t);
            // Undo the rotation to read off the offset of S'.
            let mid2 = rotate((a2 + b2) * 0.5, -vs.theta);
            assert!((mid2.y + w / 2.0).abs() < 1e-9 * t);
            assert!((a.dist(b) - 2.0 * w).abs() < 1e-9 * t);
            assert!((a2.dist(b2) - 2.0 * w).abs() < 1e-9 * t);
        }
        let vs = make_variance_segments(100.0, 0.6).unwrap();
        let TargetSet::Segment { a, b } = vs.s else {
            unreachable!()
        };
        assert!((a.dist(b) - 31.6979).abs() < 1e-4);
    }

    #[test]
    fn variance_segments_reject_bad_input() {
        assert!(matches!(make_variance_segments(16.0, 0.5), Err(Error::BadExponent(_))));
        assert!(matches!(make_variance_segments(16.0, 1.0), Err(Error::BadExponent(_))));
        assert!(make_variance_segments(1.0, 0.6).is_err());
    }

    /// Directed Hausdorff distance from one segment to another, from dense
    /// sampling of the first.
    fn sampled_excess(from: &TargetSet, to: &TargetSet) -> f64 {
        let TargetSet::Segment { a, b } = *from else {
            unreachable!()
        };
        (0..=2000)
            .map(|k| {
                let u = k as f64 / 2000.0;
                to.distance(a + (b - a) * u)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn variance_segments_are_close_in_hausdorff_distance() {
        for &t in &[16.0, 64.0, 256.0] {
            for &gp in &[0.55, 0.6, 0.7] {
                let vs = make_variance_segments(t, gp).unwrap();
                let bound = 4.0 * t.powf(2.0 * gp - 1.0);
                let h = sampled_excess(&vs.s, &vs.s_prime).max(sampled_excess(&vs.s_prime, &vs.s));
                assert!(h <= bound, "t={t} γ'={gp}: {h} > {bound}");
            }
        }
    }

    fn point() -> impl Strategy<Value = Point2> {
        (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(x, y)| Point2::new(x, y))
    }

    proptest! {
        #[test]
        fn rotation_round_trip(p in point(), theta in -10.0..10.0f64) {
            let q = rotate(rotate(p, theta), -theta);
            prop_assert!(p.dist(q) <= 1e-12 * (1.0 + p.norm()));
            prop_assert!((rotate(p, theta).norm() - p.norm()).abs() <= 1e-12 * (1.0 + p.norm()));
        }

        #[test]
        fn projection_beats_dense_samples(a in point(), b in point(), p in point()) {
            prop_assume!(a.dist(b) > 1e-6);
            let seg = TargetSet::segment(a, b).unwrap();
            let dir = b - a;
            let line = TargetSet::line(a, dir).unwrap();
            let (_, dseg) = seg.closest_point(p);
            let (_, dline) = line.closest_point(p);
            for k in 0..1000 {
                let u = k as f64 / 999.0;
                let r = a + dir * u;
                prop_assert!(dseg <= p.dist(r) + 1e-9);
                let r_line = a + dir * (4.0 * u - 2.0);
                prop_assert!(dline <= p.dist(r_line) + 1e-9);
            }
        }

        #[test]
        fn deviation_invariant_under_axial_translation(
            pts in proptest::collection::vec(point(), 1..20),
            angle in 0.0..std::f64::consts::TAU,
            shift in -100.0..100.0f64,
        ) {
            let dir = rotate(Point2::E1, angle);
            let moved: Vec<_> = pts.iter().map(|&p| p + dir * shift).collect();
            let d0 = transversal_deviation(&pts, dir).unwrap();
            let d1 = transversal_deviation(&moved, dir).unwrap();
            prop_assert!((d0 - d1).abs() <= 1e-9);
        }
    }
}
