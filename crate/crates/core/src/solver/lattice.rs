use std::collections::BTreeSet;

use super::PathSolution;
use crate::animals::Cell;
use crate::environment::{cell_index, PointConfig};
use crate::error::{Error, Result};
use crate::geometry::Point2;

fn box_side(k: i64) -> Result<f64> {
    if k < 1 || k % 2 == 0 {
        return Err(Error::BadBoxSize(k));
    }
    Ok(k as f64)
}

fn cell_of(p: Point2, side: f64) -> Cell {
    (cell_index(p.x, side), cell_index(p.y, side))
}

/// Side-`k` cells holding at least one collected point. With `k = 1` this
/// is the lattice animal of unit squares touched by the minimizer.
pub fn touched_boxes(solution: &PathSolution, config: &PointConfig, k: i64) -> Result<BTreeSet<Cell>> {
    let side = box_side(k)?;
    solution
        .path
        .interior
        .iter()
        .map(|&i| config.point(i).map(|p| cell_of(p, side)))
        .collect()
}

/// Appends the cells crossed by segment `a → b`, excluding the cell of `a`.
/// Takes exactly `|Δi|` horizontal and `|Δj|` vertical steps; when a
/// boundary corner is hit the horizontal step comes first.
fn trace_segment(a: Point2, b: Point2, side: f64, out: &mut Vec<Cell>) {
    let (mut i, mut j) = cell_of(a, side);
    let (bi, bj) = cell_of(b, side);
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let axis = |from: i64, to: i64, start: f64, d: f64| -> (i64, u64, f64, f64) {
        let step = (to - from).signum();
        if step == 0 {
            return (0, 0, f64::INFINITY, f64::INFINITY);
        }
        let bound = (from as f64 + 0.5 * step as f64) * side;
        ((step), from.abs_diff(to), (bound - start) / d, side / d.abs())
    };
    let (si, mut ni, mut tx, ddx) = axis(i, bi, a.x, dx);
    let (sj, mut nj, mut ty, ddy) = axis(j, bj, a.y, dy);
    while ni + nj > 0 {
        if nj == 0 || (ni > 0 && tx <= ty) {
            i += si;
            ni -= 1;
            tx += ddx;
        } else {
            j += sj;
            nj -= 1;
            ty += ddy;
        }
        out.push((i, j));
    }
}

/// Side-`k` cells visited in order by the polyline of `solution`,
/// consecutive entries one lattice step apart.
pub fn traced_lattice_path(solution: &PathSolution, config: &PointConfig, k: i64) -> Result<Vec<Cell>> {
    let side = box_side(k)?;
    let vertices = solution.path.vertices(config)?;
    let mut out = vec![cell_of(vertices[0], side)];
    for w in vertices.windows(2) {
        trace_segment(w[0], w[1], side, &mut out);
    }
    Ok(out)
}
