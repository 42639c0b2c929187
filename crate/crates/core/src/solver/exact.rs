use super::{beats, candidate_points, GeodesicProblem, PathSolution, SolverKind, SolverLog};
use crate::error::{Error, Result};

/// Global minimizer by Held–Karp over the pruned candidates.
///
/// `best_len[T][j]` is the shortest path from the start visiting exactly the
/// candidate subset `T` and ending at candidate `j`. Since the action is
/// increasing in length for a fixed subset size, the optimum is the minimum
/// over `(T, j)` of `(best_len[T][j] + dist(x_j, target))²/(2s) − |T|`, or the
/// straight baseline when no subset beats it.
pub fn solve_exact(problem: &GeodesicProblem) -> Result<PathSolution> {
    let candidates = candidate_points(problem);
    let m = candidates.len();
    let limit = problem.options.max_exact_points;
    if m > limit {
        return Err(Error::TooManyCandidates { found: m, limit });
    }
    let mut log = SolverLog {
        prune_hits: (problem.config.len() - m) as u64,
        ..SolverLog::default()
    };
    let pts: Vec<_> = candidates.iter().map(|&k| problem.config.points()[k]).collect();
    let from_start: Vec<f64> = pts.iter().map(|&p| problem.start.dist(p)).collect();
    let to_target: Vec<f64> = pts.iter().map(|&p| problem.target.distance(p)).collect();
    let between: Vec<f64> = (0..m * m).map(|k| pts[k / m].dist(pts[k % m])).collect();

    let states = 1usize << m;
    let mut best_len = vec![f64::INFINITY; states * m];
    let mut pred = vec![u8::MAX; states * m];
    for j in 0..m {
        best_len[(1 << j) * m + j] = from_start[j];
    }
    for mask in 1..states {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = best_len[mask * m + j];
            if !here.is_finite() {
                continue;
            }
            log.states_expanded += 1;
            let row = &between[j * m..(j + 1) * m];
            for (k, &step) in row.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let slot = next * m + k;
                let len = here + step;
                if len < best_len[slot] {
                    best_len[slot] = len;
                    pred[slot] = j as u8;
                }
            }
        }
    }

    let reconstruct = |mut mask: usize, mut j: usize| -> Vec<usize> {
        let mut seq = Vec::with_capacity(mask.count_ones() as usize);
        loop {
            seq.push(candidates[j]);
            let p = pred[mask * m + j];
            mask &= !(1 << j);
            if p == u8::MAX {
                break;
            }
            j = p as usize;
        }
        seq.reverse();
        seq
    };

    let mut best_action = problem.baseline_action();
    let mut best_seq: Vec<usize> = Vec::new();
    for mask in 1..states {
        let n = mask.count_ones() as usize;
        for j in 0..m {
            let len = best_len[mask * m + j];
            if !len.is_finite() {
                continue;
            }
            let action = problem.params.action(len + to_target[j], n);
            let tol = 1e-12 * (1.0 + best_action.abs());
            if action > best_action + tol {
                continue;
            }
            let seq = reconstruct(mask, j);
            if beats(action, &seq, best_action, &best_seq) {
                best_action = action;
                best_seq = seq;
            }
        }
    }
    Ok(problem.solution(best_seq, SolverKind::Exact, m, log))
}

#[cfg(test)]
mod tests {
    use super::super::tests::config_of;
    use super::*;
    use crate::action::{path_action, ActionParams};
    use crate::geometry::{Point2, TargetSet};
    use crate::solver::SolverOptions;

    #[test]
    fn empty_config_gives_baseline() {
        let c = config_of(&[]);
        let p = GeodesicProblem::new(
            &c,
            Point2::ORIGIN,
            TargetSet::vertical_line(6.0).unwrap(),
            ActionParams::new(3.0).unwrap(),
            SolverOptions::default(),
        )
        .unwrap();
        let sol = solve_exact(&p).unwrap();
        assert_eq!(sol.n_points, 0);
        assert_eq!(sol.action, 6.0);
        assert_eq!(sol.path.terminal, Point2::new(6.0, 0.0));
    }

    #[test]
    fn free_collinear_point_is_collected() {
        let c = config_of(&[(2.5, 0.0)]);
        let p = GeodesicProblem::new(
            &c,
            Point2::ORIGIN,
            TargetSet::vertical_line(6.0).unwrap(),
            ActionParams::new(3.0).unwrap(),
            SolverOptions::default(),
        )
        .unwrap();
        let sol = solve_exact(&p).unwrap();
        assert_eq!(sol.path.interior, vec![0]);
        assert!((sol.action - (p.baseline_action() - 1.0)).abs() < 1e-12);
        let direct = path_action(&sol.path, &c, &p.params).unwrap();
        assert!((direct - sol.action).abs() < 1e-12);
    }

    #[test]
    fn start_on_target_keeps_paying_points() {
        // Start on the line: the empty path has action 0, but a point at
        // distance 0.5 costs (0.5 + 0.5)²/2 − 1 < 0 with s = 1.
        let c = config_of(&[(-0.5, 0.0), (-9.0, 0.0)]);
        let p = GeodesicProblem::new(
            &c,
            Point2::ORIGIN,
            TargetSet::vertical_line(0.0).unwrap(),
            ActionParams::new(1.0).unwrap(),
            SolverOptions::default(),
        )
        .unwrap();
        let sol = solve_exact(&p).unwrap();
        assert_eq!(sol.path.interior, vec![0]);
        assert!((sol.action + 0.5).abs() < 1e-12);
    }
}
