//! Best-improvement local search over point sequences.
//!
//! Moves: insert an unused candidate into any gap, remove a point, swap a
//! point for an unused candidate near it, relocate a point to another gap,
//! and reverse a run of points (2-opt). Restart 0 descends from the given
//! path; restart `r > 0` kicks the incumbent with randomness from
//! `h(heuristic_seed, r)` — each point is dropped with probability 0.3 and
//! one or two random candidates are inserted at their cheapest gap — and
//! descends again.
//!
//! Insertion candidates are looked up through the configuration's cell
//! grid. An insertion only improves the action if its detour is below
//! `√(L² + 2s) − L`, which confines the candidate to an ellipse around the
//! gap (or a parabola-shaped region for the final leg to a line target).

use rand::Rng as _;

use super::{beats, candidate_points, GeodesicProblem, PathSolution, SolverKind, SolverLog};
use crate::action::PathSeq;
use crate::error::{Error, Result};
use crate::geometry::{Point2, TargetSet};
use crate::seed::{derive_seed, rng_from_seed};

const KICK_DROP_PROBABILITY: f64 = 0.3;
const KICK_MAX_INSERTED: usize = 3;

#[derive(Debug, Clone, Copy)]
enum Move {
    Insert { point: usize, gap: usize },
    Remove { vertex: usize },
    Swap { vertex: usize, point: usize },
    Relocate { vertex: usize, gap: usize },
    Reverse { from: usize, to: usize },
}

struct Search<'p, 'a> {
    problem: &'p GeodesicProblem<'a>,
    pts: &'a [Point2],
    is_candidate: Vec<bool>,
    in_path: Vec<bool>,
    two_s: f64,
    tol: f64,
    moves: u64,
}

type Rect = (f64, f64, f64, f64);

fn bbox(corners: [Point2; 4]) -> Rect {
    corners.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(x0, x1, y0, y1), p| (x0.min(p.x), x1.max(p.x), y0.min(p.y), y1.max(p.y)),
    )
}

/// Box around `{p : |a − p| + |p − b| ≤ |a − b| + delta}`.
fn ellipse_rect(a: Point2, b: Point2, delta: f64) -> Rect {
    let l = a.dist(b);
    if l == 0.0 {
        let r = delta / 2.0;
        return (a.x - r, a.x + r, a.y - r, a.y + r);
    }
    let u = (b - a) * (1.0 / l);
    let n = u.perp() * ((2.0 * l * delta + delta * delta).sqrt() / 2.0);
    let back = a + u * (-delta / 2.0);
    let front = a + u * (l + delta / 2.0);
    bbox([back + n, back - n, front + n, front - n])
}

impl<'p, 'a> Search<'p, 'a> {
    fn new(problem: &'p GeodesicProblem<'a>, candidates: &[usize]) -> Self {
        let n = problem.config.len();
        let mut is_candidate = vec![false; n];
        for &k in candidates {
            is_candidate[k] = true;
        }
        Search {
            problem,
            pts: problem.config.points(),
            is_candidate,
            in_path: vec![false; n],
            two_s: 2.0 * problem.params.s(),
            tol: problem.options.action_tolerance,
            moves: 0,
        }
    }

    fn action(&self, len: f64, n: usize) -> f64 {
        len * len / self.two_s - n as f64
    }

    /// Vertex `i` of the path: 0 is the start, `1..=N` the collected points.
    fn vertex(&self, seq: &[usize], i: usize) -> Point2 {
        if i == 0 {
            self.problem.start
        } else {
            self.pts[seq[i - 1]]
        }
    }

    /// Length of the leg from vertex `i` to vertex `j`; `j == N + 1` is the target.
    fn leg_to(&self, seq: &[usize], from: Point2, j: usize) -> f64 {
        if j > seq.len() {
            self.problem.target.distance(from)
        } else {
            from.dist(self.vertex(seq, j))
        }
    }

    fn legs(&self, seq: &[usize]) -> Vec<f64> {
        (0..=seq.len())
            .map(|k| self.leg_to(seq, self.vertex(seq, k), k + 1))
            .collect()
    }

    /// Region containing every point whose insertion into gap `k` costs a
    /// detour of at most `delta`.
    fn gap_rect(&self, seq: &[usize], k: usize, delta: f64) -> Rect {
        let a = self.vertex(seq, k);
        if k < seq.len() {
            return ellipse_rect(a, self.vertex(seq, k + 1), delta);
        }
        let (origin, dir) = match self.problem.target {
            TargetSet::SinglePoint { p } => return ellipse_rect(a, p, delta),
            TargetSet::Line { origin, direction } => (origin, direction),
            TargetSet::Segment { a: sa, b: sb } => (sa, (sb - sa) * (1.0 / sa.dist(sb))),
        };
        // dist(p, target) ≥ dist(p, line), so a parabola around the
        // perpendicular to the supporting line bounds the region.
        let foot = origin + dir * (a - origin).dot(dir);
        let d_line = a.dist(foot);
        let widened = self.problem.target.distance(a) + delta - d_line;
        let normal = if d_line > 0.0 {
            (foot - a) * (1.0 / d_line)
        } else {
            dir.perp()
        };
        let lat = dir * (2.0 * d_line * widened + widened * widened).sqrt();
        let back = a + normal * (-widened / 2.0);
        let front = a + normal * (d_line + widened / 2.0);
        bbox([back + lat, back - lat, front + lat, front - lat])
    }

    fn best_move(&self, seq: &[usize], len: f64) -> Option<(Move, f64)> {
        let n = seq.len();
        let current = self.action(len, n);
        let mut best: Option<(Move, f64)> = None;
        let mut best_value = current - self.tol;
        let mut offer = |mv: Move, value: f64, best: &mut Option<(Move, f64)>| {
            if value < best_value {
                best_value = value;
                *best = Some((mv, value));
            }
        };
        let legs = self.legs(seq);

        // Insertions.
        let max_detour = self.two_s / ((len * len + self.two_s).sqrt() + len) * (1.0 + 1e-9) + 1e-12;
        for (k, &leg) in legs.iter().enumerate() {
            let a = self.vertex(seq, k);
            let (x0, x1, y0, y1) = self.gap_rect(seq, k, max_detour);
            self.problem.config.for_each_near_rect(x0, x1, y0, y1, |p| {
                if !self.is_candidate[p] || self.in_path[p] {
                    return;
                }
                let q = self.pts[p];
                let detour = a.dist(q) + self.leg_to(seq, q, k + 1) - leg;
                if detour < max_detour {
                    offer(
                        Move::Insert { point: p, gap: k },
                        self.action(len + detour, n + 1),
                        &mut best,
                    );
                }
            });
        }

        for i in 1..=n {
            let prev = self.vertex(seq, i - 1);
            let x = self.vertex(seq, i);
            let removal = self.leg_to(seq, prev, i + 1) - legs[i - 1] - legs[i];
            offer(Move::Remove { vertex: i }, self.action(len + removal, n - 1), &mut best);

            // Swaps: the replacement must cost less detour over the bypass
            // than the current point does.
            let slack = legs[i - 1] + legs[i] - self.leg_to(seq, prev, i + 1);
            let (x0, x1, y0, y1) = if i < n {
                ellipse_rect(prev, self.vertex(seq, i + 1), slack)
            } else {
                self.gap_rect(&seq[..n - 1], n - 1, slack)
            };
            self.problem.config.for_each_near_rect(x0, x1, y0, y1, |p| {
                if !self.is_candidate[p] || self.in_path[p] {
                    return;
                }
                let q = self.pts[p];
                let delta = prev.dist(q) + self.leg_to(seq, q, i + 1) - legs[i - 1] - legs[i];
                if delta < 0.0 {
                    offer(
                        Move::Swap { vertex: i, point: p },
                        self.action(len + delta, n),
                        &mut best,
                    );
                }
            });

            for k in (0..=n).filter(|&k| k + 1 != i && k != i) {
                let insertion = self.vertex(seq, k).dist(x) + self.leg_to(seq, x, k + 1) - legs[k];
                let delta = removal + insertion;
                if delta < 0.0 {
                    offer(
                        Move::Relocate { vertex: i, gap: k },
                        self.action(len + delta, n),
                        &mut best,
                    );
                }
            }

            for j in i + 1..=n {
                let delta = prev.dist(self.vertex(seq, j)) + self.leg_to(seq, x, j + 1) - legs[i - 1] - legs[j];
                if delta < 0.0 {
                    offer(Move::Reverse { from: i, to: j }, self.action(len + delta, n), &mut best);
                }
            }
        }
        best
    }

    fn apply(&mut self, seq: &mut Vec<usize>, mv: Move) {
        match mv {
            Move::Insert { point, gap } => {
                seq.insert(gap, point);
                self.in_path[point] = true;
            }
            Move::Remove { vertex } => {
                let p = seq.remove(vertex - 1);
                self.in_path[p] = false;
            }
            Move::Swap { vertex, point } => {
                let old = std::mem::replace(&mut seq[vertex - 1], point);
                self.in_path[old] = false;
                self.in_path[point] = true;
            }
            Move::Relocate { vertex, gap } => {
                let p = seq.remove(vertex - 1);
                let at = if gap < vertex { gap } else { gap - 1 };
                seq.insert(at, p);
            }
            Move::Reverse { from, to } => seq[from - 1..to].reverse(),
        }
        self.moves += 1;
    }

    /// Inserts `p` into the gap where it adds the least length.
    fn insert_cheapest(&self, seq: &mut Vec<usize>, p: usize) {
        let q = self.pts[p];
        let legs = self.legs(seq);
        let gap = (0..=seq.len())
            .map(|k| (self.vertex(seq, k).dist(q) + self.leg_to(seq, q, k + 1) - legs[k], k))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map_or(0, |(_, k)| k);
        seq.insert(gap, p);
    }

    fn descend(&mut self, seq: &mut Vec<usize>) -> f64 {
        for &p in seq.iter() {
            self.in_path[p] = true;
        }
        let mut len = self.problem.sequence_length(seq);
        while let Some((mv, _)) = self.best_move(seq, len) {
            self.apply(seq, mv);
            len = self.problem.sequence_length(seq);
        }
        for &p in seq.iter() {
            self.in_path[p] = false;
        }
        self.action(len, seq.len())
    }
}

fn check_sequence(problem: &GeodesicProblem, interior: &[usize]) -> Result<()> {
    let n = problem.config.len();
    let mut seen = vec![false; n];
    for &k in interior {
        if k >= n {
            return Err(Error::BadIndex { index: k, len: n });
        }
        if std::mem::replace(&mut seen[k], true) {
            return Err(Error::RepeatedIndex(k));
        }
    }
    Ok(())
}

fn run(problem: &GeodesicProblem, initial: Vec<usize>, restarts: u32) -> Result<PathSolution> {
    check_sequence(problem, &initial)?;
    let candidates = candidate_points(problem);
    let mut search = Search::new(problem, &candidates);
    let mut best_seq = initial;
    let mut best_action = search.descend(&mut best_seq);
    for r in 1..restarts.max(1) {
        let mut rng = rng_from_seed(derive_seed(problem.options.heuristic_seed, r as u64));
        let mut seq: Vec<usize> = best_seq
            .iter()
            .copied()
            .filter(|_| !rng.gen_bool(KICK_DROP_PROBABILITY))
            .collect();
        if !candidates.is_empty() {
            for _ in 0..rng.gen_range(1..=KICK_MAX_INSERTED) {
                let p = candidates[rng.gen_range(0..candidates.len())];
                if !seq.contains(&p) {
                    search.insert_cheapest(&mut seq, p);
                }
            }
        }
        let action = search.descend(&mut seq);
        if beats(action, &seq, best_action, &best_seq) {
            best_action = action;
            best_seq = seq;
        }
    }
    let log = SolverLog {
        prune_hits: (problem.config.len() - candidates.len()) as u64,
        moves_applied: search.moves,
        restarts: restarts.max(1),
        ..SolverLog::default()
    };
    Ok(problem.solution(best_seq, SolverKind::Heuristic, candidates.len(), log))
}

/// Local search with randomized restarts from the straight path.
pub fn solve_heuristic(problem: &GeodesicProblem) -> Result<PathSolution> {
    run(problem, Vec::new(), problem.options.heuristic_restarts)
}

/// Single descent from `path`'s interior sequence, without restarts.
pub fn improve_path(problem: &GeodesicProblem, path: &PathSeq) -> Result<PathSolution> {
    run(problem, path.interior.clone(), 1)
}

#[cfg(test)]
mod tests {
    use super::super::tests::config_of;
    use super::*;
    use crate::action::{path_action, ActionParams};
    use crate::environment::{sample_poisson, Window};
    use crate::solver::{solve_exact, SolverOptions};

    fn instance(seed: u64) -> (crate::environment::PointConfig, ActionParams) {
        let w = Window::new(-2.0, 10.0, -6.0, 6.0).unwrap();
        (sample_poisson(w, 1.0, seed).unwrap(), ActionParams::new(4.0).unwrap())
    }

    #[test]
    fn empty_config_gives_baseline() {
        let c = config_of(&[]);
        let p = GeodesicProblem::new(
            &c,
            Point2::ORIGIN,
            TargetSet::vertical_line(5.0).unwrap(),
            ActionParams::new(2.0).unwrap(),
            SolverOptions::default(),
        )
        .unwrap();
        let sol = solve_heuristic(&p).unwrap();
        assert_eq!(sol.n_points, 0);
        assert_eq!(sol.action, p.baseline_action());
        assert!(!sol.optimal);
    }

    #[test]
    fn output_is_a_fixed_point_and_deterministic() {
        for seed in 0..10 {
            for target in [
                TargetSet::vertical_line(8.0).unwrap(),
                TargetSet::segment(Point2::new(8.0, -1.0), Point2::new(8.0, 3.0)).unwrap(),
                TargetSet::point(Point2::new(8.0, 1.0)).unwrap(),
            ] {
                let (c, params) = instance(seed);
                let p = GeodesicProblem::new(&c, Point2::ORIGIN, target, params, SolverOptions::default()).unwrap();
                let sol = solve_heuristic(&p).unwrap();
                assert!(sol.action <= p.baseline_action() + 1e-9);
                let direct = path_action(&sol.path, &c, &params).unwrap();
                assert!((direct - sol.action).abs() <= 1e-9);
                let again = improve_path(&p, &sol.path).unwrap();
                assert_eq!(again.action, sol.action);
                assert_eq!(solve_heuristic(&p).unwrap(), sol);
            }
        }
    }

    #[test]
    fn region_queries_do_not_miss_improvements() {
        // Compare the grid-restricted insertion scan with a scan over every
        // candidate on the first move from the straight path.
        for seed in 0..20 {
            let target = TargetSet::segment(Point2::new(8.0, -3.0), Point2::new(8.0, 2.0)).unwrap();
            let (c, params) = instance(seed);
            let p = GeodesicProblem::new(&c, Point2::new(0.5, 0.5), target, params, SolverOptions::default()).unwrap();
            let cands = candidate_points(&p);
            let search = Search::new(&p, &cands);
            let len = p.sequence_length(&[]);
            let from_grid = search.best_move(&[], len).map(|(_, v)| v);
            let brute = cands
                .iter()
                .map(|&k| search.action(p.sequence_length(&[k]), 1))
                .fold(f64::INFINITY, f64::min);
            let expected = (brute < search.action(len, 0) - 1e-9).then_some(brute);
            assert_eq!(from_grid, expected, "seed {seed}");
        }
    }

    #[test]
    fn matches_exact_on_small_instances() {
        let mut agree = 0;
        for seed in 0..30 {
            let w = Window::new(0.0, 6.0, 0.0, 6.0).unwrap();
            let full = sample_poisson(w, 1.0, seed).unwrap();
            let pts: Vec<(f64, f64)> = full.points().iter().take(10).map(|p| (p.x, p.y)).collect();
            let c = config_of(&pts);
            let p = GeodesicProblem::new(
                &c,
                Point2::ORIGIN,
                TargetSet::vertical_line(6.0).unwrap(),
                ActionParams::new(3.0).unwrap(),
                SolverOptions::default(),
            )
            .unwrap();
            let exact = solve_exact(&p).unwrap();
            let heur = solve_heuristic(&p).unwrap();
            assert!(heur.action >= exact.action - 1e-9);
            if (heur.action - exact.action).abs() <= 1e-9 {
                agree += 1;
            }
        }
        assert!(agree >= 27, "{agree}/30");
    }

    #[test]
    fn rejects_bad_sequences() {
        let c = config_of(&[(1.0, 0.0)]);
        let p = GeodesicProblem::new(
            &c,
            Point2::ORIGIN,
            TargetSet::vertical_line(5.0).unwrap(),
            ActionParams::new(2.0).unwrap(),
            SolverOptions::default(),
        )
        .unwrap();
        let bad = PathSeq::straight(Point2::ORIGIN, Point2::ORIGIN);
        assert!(improve_path(&p, &bad).is_ok());
        let bad = PathSeq {
            interior: vec![4],
            ..bad
        };
        assert!(matches!(improve_path(&p, &bad), Err(Error::BadIndex { .. })));
    }
}
