//! Poisson environments on rectangular windows, indexed by unit cells.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Poisson};

use crate::animals::AnimalGrid;
use crate::error::{Error, Result};
use crate::format::Sig17;
use crate::geometry::{Point2, GEOM_TOL};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Window {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        let w = Window { xmin, xmax, ymin, ymax };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.xmin, self.xmax, self.ymin, self.ymax]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::BadWindow("bounds must be finite".into()));
        }
        if !(self.xmax > self.xmin && self.ymax > self.ymin) {
            return Err(Error::BadWindow(format!(
                "[{}, {}] x [{}, {}] has zero area",
                self.xmin, self.xmax, self.ymin, self.ymax
            )));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }

    /// Closed containment.
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }
}

/// Where a configuration came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: Option<u64>,
    pub intensity: f64,
    /// Number of points produced by sampling, before any insertions.
    pub sampled: usize,
}

/// Index of the half-open cell `[side·k − side/2, side·k + side/2)` containing `v`.
pub fn cell_index(v: f64, side: f64) -> i64 {
    let mut k = (v / side + 0.5).floor() as i64;
    let half = side / 2.0;
    if v < k as f64 * side - half {
        k -= 1;
    } else if v >= k as f64 * side + half {
        k += 1;
    }
    k
}

/// Unit square `B_(i,j) = [i−½, i+½) × [j−½, j+½)` containing `p`.
pub fn unit_cell(p: Point2) -> (i64, i64) {
    (cell_index(p.x, 1.0), cell_index(p.y, 1.0))
}

/// Compressed cell → point-index map over the unit cells meeting a window.
#[derive(Debug, Clone)]
struct CellGrid {
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl CellGrid {
    fn build(window: &Window, points: &[Point2]) -> Self {
        let i0 = cell_index(window.xmin, 1.0);
        let j0 = cell_index(window.ymin, 1.0);
        let nx = (cell_index(window.xmax, 1.0) - i0 + 1) as usize;
        let ny = (cell_index(window.ymax, 1.0) - j0 + 1) as usize;
        let mut counts = vec![0u32; nx * ny + 1];
        let slots: Vec<usize> = points
            .iter()
            .map(|&p| {
                let (i, j) = unit_cell(p);
                (j - j0) as usize * nx + (i - i0) as usize
            })
            .collect();
        for &s in &slots {
            counts[s + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (idx, &s) in slots.iter().enumerate() {
            items[fill[s] as usize] = idx as u32;
            fill[s] += 1;
        }
        CellGrid {
            i0,
            j0,
            nx,
            ny,
            offsets: counts,
            items,
        }
    }

    fn cell(&self, i: i64, j: i64) -> &[u32] {
        let (di, dj) = (i - self.i0, j - self.j0);
        if di < 0 || dj < 0 || di as usize >= self.nx || dj as usize >= self.ny {
            return &[];
        }
        let s = dj as usize * self.nx + di as usize;
        &self.items[self.offsets[s] as usize..self.offsets[s + 1] as usize]
    }

    fn cell_range(&self, lo: f64, hi: f64, origin: i64, n: usize) -> Option<(i64, i64)> {
        let a = cell_index(lo, 1.0).max(origin);
        let b = cell_index(hi, 1.0).min(origin + n as i64 - 1);
        (a <= b).then_some((a, b))
    }
}

/// An immutable finite point configuration with a unit-cell index.
#[derive(Debug, Clone)]
pub struct PointConfig {
    points: Vec<Point2>,
    window: Window,
    grid: CellGrid,
    seed_record: SeedRecord,
}

impl PointConfig {
    pub fn empty(window: Window) -> Self {
        PointConfig {
            grid: CellGrid::build(&window, &[]),
            points: Vec::new(),
            window,
            seed_record: SeedRecord {
                seed: None,
                intensity: 0.0,
                sampled: 0,
            },
        }
    }

    /// Validated construction from explicit points.
    pub fn from_points(window: Window, points: Vec<Point2>, seed_record: SeedRecord) -> Result<Self> {
        window.validate()?;
        let config = PointConfig::empty(window).with_record(seed_record);
        insert_points(&config, &points)
    }

    fn with_record(mut self, seed_record: SeedRecord) -> Self {
        self.seed_record = seed_record;
        self
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Result<Point2> {
        self.points.get(index).copied().ok_or(Error::BadIndex {
            index,
            len: self.points.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn seed_record(&self) -> &SeedRecord {
        &self.seed_record
    }

    /// Point indices stored in unit cell `(i, j)`.
    pub fn cell_points(&self, i: i64, j: i64) -> impl Iterator<Item = usize> + '_ {
        self.grid.cell(i, j).iter().map(|&k| k as usize)
    }

    /// Calls `visit` for every point in a unit cell meeting the rectangle.
    /// Callers apply their own exact filter.
    pub fn for_each_near_rect(&self, xmin: f64, xmax: f64, ymin: f64, ymax: f64, mut visit: impl FnMut(usize)) {
        let g = &self.grid;
        let (Some((ia, ib)), Some((ja, jb))) = (
            g.cell_range(xmin, xmax, g.i0, g.nx),
            g.cell_range(ymin, ymax, g.j0, g.ny),
        ) else {
            return;
        };
        for j in ja..=jb {
            for i in ia..=ib {
                for &k in g.cell(i, j) {
                    visit(k as usize);
                }
            }
        }
    }

    /// Index of a configuration point within `tol` of `p`, if any.
    pub fn find_near(&self, p: Point2, tol: f64) -> Option<usize> {
        let mut found = None;
        self.for_each_near_rect(p.x - tol, p.x + tol, p.y - tol, p.y + tol, |k| {
            if found.is_none() && self.points[k].dist(p) <= tol {
                found = Some(k);
            }
        });
        found
    }
}

/// Sample `N ~ Poisson(mean)` by inversion of the CDF at `u`.
pub fn poisson_inverse(mean: f64, u: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 500.0 {
        // Sequential search; exp(-mean) is representable in this range.
        let mut k = 0u64;
        let mut pmf = (-mean).exp();
        let mut cdf = pmf;
        while u > cdf && pmf > 0.0 {
            k += 1;
            pmf *= mean / k as f64;
            cdf += pmf;
        }
        return k;
    }
    Poisson::new(mean)
        .map(|d| d.inverse_cdf(u))
        .unwrap_or(mean.round() as u64)
}

/// Unit-rate-scaled Poisson process of the given intensity on `window`.
pub fn sample_poisson(window: Window, intensity: f64, seed: u64) -> Result<PointConfig> {
    window.validate()?;
    if !(intensity > 0.0) || !intensity.is_finite() {
        return Err(Error::BadIntensity(intensity));
    }
    let mut rng = rng_from_seed(seed);
    let count = poisson_inverse(intensity * window.area(), rng.gen::<f64>()) as usize;
    let draw = |rng: &mut crate::seed::Rng| {
        Point2::new(
            window.xmin + (window.xmax - window.xmin) * rng.gen::<f64>(),
            window.ymin + (window.ymax - window.ymin) * rng.gen::<f64>(),
        )
    };
    let mut points: Vec<Point2> = (0..count).map(|_| draw(&mut rng)).collect();
    // Redraw the later member of any near-coincident pair; this essentially
    // never triggers but keeps the distinctness invariant exact.
    loop {
        let grid = CellGrid::build(&window, &points);
        let clash = (0..points.len()).find(|&k| {
            let (i, j) = unit_cell(points[k]);
            (-1..=1).any(|dj| {
                (-1..=1).any(|di| {
                    grid.cell(i + di, j + dj)
                        .iter()
                        .any(|&m| (m as usize) < k && points[m as usize].dist(points[k]) <= GEOM_TOL)
                })
            })
        });
        match clash {
            Some(k) => points[k] = draw(&mut rng),
            None => {
                return Ok(PointConfig {
                    points,
                    window,
                    grid,
                    seed_record: SeedRecord {
                        seed: Some(seed),
                        intensity,
                        sampled: count,
                    },
                });
            }
        }
    }
}

/// Empty configuration when `intensity == 0`, otherwise a Poisson sample.
pub fn sample_or_empty(window: Window, intensity: f64, seed: u64) -> Result<PointConfig> {
    if intensity == 0.0 {
        window.validate()?;
        return Ok(PointConfig::empty(window).with_record(SeedRecord {
            seed: Some(seed),
            intensity: 0.0,
            sampled: 0,
        }));
    }
    sample_poisson(window, intensity, seed)
}

/// Square box of side `side` centred at `(side·i, side·j)`, half-open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub center: (i64, i64),
    pub side: f64,
}

impl BoxSpec {
    pub fn new(center: (i64, i64), side: f64) -> Result<Self> {
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "box side must be positive, got {side}"
            )));
        }
        Ok(BoxSpec { center, side })
    }

    /// `(xmin, xmax, ymin, ymax)`; the upper bounds are excluded.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let h = self.side / 2.0;
        let cx = self.center.0 as f64 * self.side;
        let cy = self.center.1 as f64 * self.side;
        (cx - h, cx + h, cy - h, cy + h)
    }

    pub fn contains(&self, p: Point2) -> bool {
        cell_index(p.x, self.side) == self.center.0 && cell_index(p.y, self.side) == self.center.1
    }

    /// The box containing `p`.
    pub fn containing(p: Point2, side: f64) -> Result<Self> {
        BoxSpec::new((cell_index(p.x, side), cell_index(p.y, side)), side)
    }
}

pub fn count_in_box(config: &PointConfig, bx: &BoxSpec) -> usize {
    let (x0, x1, y0, y1) = bx.bounds();
    let mut n = 0;
    config.for_each_near_rect(x0, x1, y0, y1, |k| {
        if bx.contains(config.points[k]) {
            n += 1;
        }
    });
    n
}

/// New configuration with `new_points` appended after the existing ones.
pub fn insert_points(config: &PointConfig, new_points: &[Point2]) -> Result<PointConfig> {
    let mut points = config.points.clone();
    points.reserve(new_points.len());
    for (n, &p) in new_points.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::InvalidParameter("non-finite point".into()));
        }
        if !config.window.contains(p) {
            return Err(Error::OutsideWindow { x: p.x, y: p.y });
        }
        if config.find_near(p, GEOM_TOL).is_some() || new_points[..n].iter().any(|q| q.dist(p) <= GEOM_TOL) {
            return Err(Error::DuplicatePoint { x: p.x, y: p.y });
        }
        points.push(p);
    }
    Ok(PointConfig {
        grid: CellGrid::build(&config.window, &points),
        points,
        window: config.window,
        seed_record: config.seed_record.clone(),
    })
}

/// Field `X_(i,j) = ω(B_(i,j))` of unit-square counts.
pub fn unit_square_counts(config: &PointConfig) -> AnimalGrid {
    let mut counts: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for &p in &config.points {
        *counts.entry(unit_cell(p)).or_insert(0.0) += 1.0;
    }
    AnimalGrid::from_map(counts)
}

#[derive(Serialize)]
struct WindowOut {
    xmin: Sig17,
    xmax: Sig17,
    ymin: Sig17,
    ymax: Sig17,
}

#[derive(Serialize)]
struct EnvironmentOut {
    window: WindowOut,
    seed: Option<u64>,
    intensity: Sig17,
    points: Vec<[Sig17; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvironmentIn {
    window: Window,
    seed: Option<u64>,
    intensity: f64,
    points: Vec<[f64; 2]>,
}

impl PointConfig {
    /// Environment document: `{window, seed, intensity, points: [[x, y], ...]}`.
    pub fn to_json(&self) -> Result<String> {
        let w = self.window;
        let doc = EnvironmentOut {
            window: WindowOut {
                xmin: Sig17(w.xmin),
                xmax: Sig17(w.xmax),
                ymin: Sig17(w.ymin),
                ymax: Sig17(w.ymax),
            },
            seed: self.seed_record.seed,
            intensity: Sig17(self.seed_record.intensity),
            points: self.points.iter().map(|p| [Sig17(p.x), Sig17(p.y)]).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EnvironmentIn = serde_json::from_str(text)?;
        let points: Vec<Point2> = doc.points.into_iter().map(Point2::from).collect();
        let record = SeedRecord {
            seed: doc.seed,
            intensity: doc.intensity,
            sampled: points.len(),
        };
        PointConfig::from_points(doc.window, points, record)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        PointConfig::from_json(&fs::read_to_string(path)?)
    }
}
