use super::{beats, candidate_points, GeodesicProblem, PathSolution, SolverKind, SolverLog};
use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Largest candidate count [`brute_force`] accepts.
pub const BRUTE_FORCE_CAP: usize = 9;

/// Exhaustive optimum over every ordered selection of candidates. Used as
/// an oracle for the other solvers.
pub fn brute_force(problem: &GeodesicProblem) -> Result<PathSolution> {
    let candidates = candidate_points(problem);
    if candidates.len() > BRUTE_FORCE_CAP {
        return Err(Error::TooManyCandidates {
            found: candidates.len(),
            limit: BRUTE_FORCE_CAP,
        });
    }
    struct Walk<'p, 'a> {
        problem: &'p GeodesicProblem<'a>,
        candidates: Vec<usize>,
        used: Vec<bool>,
        seq: Vec<usize>,
        best_action: f64,
        best_seq: Vec<usize>,
        visited: u64,
    }
    impl Walk<'_, '_> {
        fn go(&mut self, at: Point2, len: f64) {
            self.visited += 1;
            let total = len + self.problem.target.distance(at);
            let action = self.problem.params.action(total, self.seq.len());
            if beats(action, &self.seq, self.best_action, &self.best_seq) {
                self.best_action = action;
                self.best_seq = self.seq.clone();
            }
            for c in 0..self.candidates.len() {
                if self.used[c] {
                    continue;
                }
                let k = self.candidates[c];
                let p = self.problem.config.points()[k];
                self.used[c] = true;
                self.seq.push(k);
                self.go(p, len + at.dist(p));
                self.seq.pop();
                self.used[c] = false;
            }
        }
    }
    let m = candidates.len();
    let mut walk = Walk {
        problem,
        used: vec![false; m],
        candidates,
        seq: Vec::with_capacity(m),
        best_action: f64::INFINITY,
        best_seq: Vec::new(),
        visited: 0,
    };
    walk.go(problem.start, 0.0);
    let log = SolverLog {
        states_expanded: walk.visited,
        prune_hits: (problem.config.len() - m) as u64,
        ..SolverLog::default()
    };
    Ok(problem.solution(walk.best_seq, SolverKind::BruteForce, m, log))
}
