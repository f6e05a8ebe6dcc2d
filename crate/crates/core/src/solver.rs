//! Exact solvers for both recruitment programs.
//!
//! The platform program is an assignment of one distinct worker per required
//! skill with a pairwise relationship bonus, solved by depth-first branch and
//! bound over the required skills. The leader program decomposes into one
//! forced-membership platform-style solve per candidate leader. A brute-force
//! enumerator is kept alongside as an independent oracle for small instances.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::formulation::Strategy;
use crate::knowledge::{RecruiterId, RecruiterView};
use crate::objective::{team_objective, Coefficients, Normalizers, Project, TeamAssignment};

/// Objective margin below which two teams count as tied; ties go to the
/// lexicographically smallest `(leader, worker per skill)` key.
pub const TIE_EPS: f64 = 1e-10;

/// Largest instance the brute-force oracle accepts.
pub const ORACLE_MAX_WORKERS: usize = 12;
pub const ORACLE_MAX_SKILLS: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub prunes: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SolveStats {
    fn absorb(&mut self, other: &SolveStats) {
        self.nodes += other.nodes;
        self.prunes += other.prunes;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeamSolution {
    pub strategy: Strategy,
    pub assignment: TeamAssignment,
    pub objective: f64,
    pub stats: SolveStats,
}

#[derive(Serialize)]
struct MemberDoc {
    worker: usize,
    skill: usize,
}

#[derive(Serialize)]
struct SolutionDoc<'a> {
    strategy: Strategy,
    leader: Option<usize>,
    members: Vec<MemberDoc>,
    objective: f64,
    stats: &'a SolveStats,
}

impl Serialize for TeamSolution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SolutionDoc {
            strategy: self.strategy,
            leader: self.assignment.leader,
            members: self.assignment.members.iter().map(|(&worker, &skill)| MemberDoc { worker, skill }).collect(),
            objective: self.objective,
            stats: &self.stats,
        }
        .serialize(serializer)
    }
}

fn check_feasible(num_workers: usize, project: &Project) -> Result<()> {
    if num_workers < project.team_size() {
        return Err(Error::Infeasible { workers: num_workers, skills: project.team_size() });
    }
    Ok(())
}

struct Search<'a> {
    coef: &'a Coefficients,
    n: usize,
    m: usize,
    forced: Option<usize>,
    used: Vec<bool>,
    chosen: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    stats: SolveStats,
}

impl<'a> Search<'a> {
    fn new(coef: &'a Coefficients, forced: Option<usize>) -> Self {
        let (n, m) = (coef.linear.rows(), coef.linear.cols());
        Search {
            coef,
            n,
            m,
            forced,
            used: vec![false; n],
            chosen: Vec::with_capacity(m),
            best: None,
            stats: SolveStats::default(),
        }
    }

    fn cross(&self, j: usize) -> f64 {
        self.chosen.iter().map(|&a| self.coef.pair[(j, a)]).sum()
    }

    /// Optimistic value of filling positions `depth..m`: per position, the best
    /// unused worker's linear term plus its bonus with the chosen members plus
    /// `(r - 1) / 2` times its best bonus with any other unused worker.
    fn completion_bound(&self, depth: usize) -> f64 {
        let r = self.m - depth;
        let spread = (r as f64 - 1.0) / 2.0;
        let mut gain = vec![0.0; self.n];
        for j in (0..self.n).filter(|&j| !self.used[j]) {
            let mut best_pair = 0.0f64;
            if r > 1 {
                best_pair = f64::NEG_INFINITY;
                for jp in (0..self.n).filter(|&jp| jp != j && !self.used[jp]) {
                    best_pair = best_pair.max(self.coef.pair[(j, jp)]);
                }
            }
            gain[j] = self.cross(j) + spread * best_pair;
        }
        (depth..self.m)
            .map(|p| {
                (0..self.n)
                    .filter(|&j| !self.used[j])
                    .map(|j| self.coef.linear[(j, p)] + gain[j])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum()
    }

    /// Returns the best complete value found beneath this node, if any.
    fn dfs(&mut self, depth: usize, value: f64) -> Option<f64> {
        self.stats.nodes += 1;
        if depth == self.m {
            let better = match &self.best {
                None => true,
                Some((best, _)) => value > best + TIE_EPS,
            };
            if better {
                self.best = Some((value, self.chosen.clone()));
            }
            return Some(value);
        }

        let bound = value + self.completion_bound(depth);
        if let Some((best, _)) = &self.best {
            if bound <= best + TIE_EPS {
                self.stats.prunes += 1;
                return None;
            }
        }

        let must_place = self.forced.filter(|&f| !self.used[f] && depth + 1 == self.m);
        let mut found: Option<f64> = None;
        for j in 0..self.n {
            if self.used[j] || must_place.is_some_and(|f| f != j) {
                continue;
            }
            let step = self.coef.linear[(j, depth)] + self.cross(j);
            self.used[j] = true;
            self.chosen.push(j);
            let below = self.dfs(depth + 1, value + step);
            self.chosen.pop();
            self.used[j] = false;
            if let Some(v) = below {
                found = Some(found.map_or(v, |f: f64| f.max(v)));
            }
        }
        if let Some(f) = found {
            debug_assert!(f <= bound + 1e-9, "inadmissible bound {bound} < completion {f} at depth {depth}");
        }
        found
    }
}

struct Incumbent {
    workers: Vec<usize>,
    stats: SolveStats,
}

fn search(view: &RecruiterView, project: &Project, norms: &Normalizers, forced: Option<usize>) -> Result<Incumbent> {
    check_feasible(view.num_workers(), project)?;
    if let Some(f) = forced {
        if f >= view.num_workers() {
            return Err(Error::param(format!("forced member {f} out of range")));
        }
    }
    let start = Instant::now();
    let coef = Coefficients::new(view, project, norms);
    let mut s = Search::new(&coef, forced);
    s.dfs(0, 0.0);
    let (_, workers) = s.best.ok_or(Error::Infeasible { workers: view.num_workers(), skills: project.team_size() })?;
    let mut stats = s.stats;
    stats.wall_time = start.elapsed();
    Ok(Incumbent { workers, stats })
}

fn finish(
    strategy: Strategy,
    view: &RecruiterView,
    project: &Project,
    norms: &Normalizers,
    workers: &[usize],
    leader: Option<usize>,
    stats: SolveStats,
) -> Result<TeamSolution> {
    let assignment = TeamAssignment::from_workers_by_skill(view.recruiter, project, workers, leader);
    let objective = team_objective(view, project, &assignment, norms)?;
    Ok(TeamSolution { strategy, assignment, objective, stats })
}

/// Optimal platform-recruited team.
pub fn solve_platform(view: &RecruiterView, project: &Project, norms: &Normalizers) -> Result<TeamSolution> {
    let inc = search(view, project, norms, None)?;
    finish(Strategy::Platform, view, project, norms, &inc.workers, None, inc.stats)
}

/// Optimal team under `view` that must include `member`. This is one
/// candidate-leader subproblem of the leader strategy when `view` is the
/// member's own view.
pub fn solve_with_member(view: &RecruiterView, project: &Project, norms: &Normalizers, member: usize) -> Result<TeamSolution> {
    let inc = search(view, project, norms, Some(member))?;
    let leader = match view.recruiter {
        RecruiterId::Worker(i) if i == member => Some(i),
        _ => None,
    };
    let strategy = if leader.is_some() { Strategy::Leader } else { Strategy::Platform };
    finish(strategy, view, project, norms, &inc.workers, leader, inc.stats)
}

fn check_leader_inputs(views: &[RecruiterView], norms: &[Normalizers]) -> Result<()> {
    let n = views.len();
    if n == 0 || norms.len() != n {
        return Err(Error::param(format!("leader solve needs one view and normalizer set per worker ({} / {})", n, norms.len())));
    }
    for (i, v) in views.iter().enumerate() {
        if v.recruiter != RecruiterId::Worker(i) || v.num_workers() != n {
            return Err(Error::param(format!("view {i} must be worker {i}'s view of {n} workers")));
        }
    }
    Ok(())
}

/// Optimal leader-recruited team: the best over candidate leaders `i` of the
/// team `i` would recruit with itself included. Ties go to the smallest
/// leader index.
pub fn solve_leader(views: &[RecruiterView], project: &Project, norms: &[Normalizers]) -> Result<TeamSolution> {
    check_leader_inputs(views, norms)?;
    check_feasible(views.len(), project)?;
    let start = Instant::now();
    let per_leader: Vec<(usize, Incumbent, f64)> = (0..views.len())
        .into_par_iter()
        .map(|i| {
            let inc = search(&views[i], project, &norms[i], Some(i))?;
            let value = Coefficients::new(&views[i], project, &norms[i]).value(&inc.workers);
            Ok((i, inc, value))
        })
        .collect::<Result<_>>()?;

    let mut stats = SolveStats::default();
    let mut best: Option<(usize, f64)> = None;
    for (pos, (i, inc, value)) in per_leader.iter().enumerate() {
        stats.absorb(&inc.stats);
        if best.is_none_or(|(_, b)| *value > b + TIE_EPS) {
            best = Some((pos, *value));
            debug_assert_eq!(pos, *i);
        }
    }
    let (leader, _) = best.expect("at least one candidate leader");
    stats.wall_time = start.elapsed();
    finish(Strategy::Leader, &views[leader], project, &norms[leader], &per_leader[leader].1.workers, Some(leader), stats)
}

/// Visits every injective required-skill -> worker map in lexicographic order
/// of the per-skill worker list.
fn for_each_injective(n: usize, m: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(n: usize, m: usize, used: &mut [bool], cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if cur.len() == m {
            visit(cur);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(n, m, used, cur, visit);
                cur.pop();
                used[j] = false;
            }
        }
    }
    rec(n, m, &mut vec![false; n], &mut Vec::with_capacity(m), &mut visit);
}

/// Exhaustive optimum scored with `team_objective`, using the same tie-break
/// as the branch-and-bound solvers. Platform mode takes exactly one view (the
/// platform's); leader mode takes every worker's view.
pub fn brute_force_oracle(
    views: &[RecruiterView],
    project: &Project,
    norms: &[Normalizers],
    strategy: Strategy,
) -> Result<TeamSolution> {
    let n = views.first().map_or(0, RecruiterView::num_workers);
    let m = project.team_size();
    if n > ORACLE_MAX_WORKERS || m > ORACLE_MAX_SKILLS {
        return Err(Error::Size(format!(
            "J={n}, |S_p|={m} exceeds oracle limits J<={ORACLE_MAX_WORKERS}, |S_p|<={ORACLE_MAX_SKILLS}"
        )));
    }
    let start = Instant::now();
    let candidates: Vec<usize> = match strategy {
        Strategy::Platform => {
            if views.len() != 1 || norms.len() != 1 || views[0].recruiter != RecruiterId::Platform {
                return Err(Error::param("platform oracle needs exactly the platform's view"));
            }
            vec![0]
        }
        Strategy::Leader => {
            check_leader_inputs(views, norms)?;
            (0..n).collect()
        }
    };
    check_feasible(n, project)?;

    let mut stats = SolveStats::default();
    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    let mut failure = None;
    for &c in &candidates {
        let (view, norm) = (&views[c], &norms[c]);
        let leader = (strategy == Strategy::Leader).then_some(c);
        for_each_injective(n, m, |workers| {
            if leader.is_some_and(|l| !workers.contains(&l)) || failure.is_some() {
                return;
            }
            stats.nodes += 1;
            let team = TeamAssignment::from_workers_by_skill(view.recruiter, project, workers, leader);
            match team_objective(view, project, &team, norm) {
                Ok(value) => {
                    if best.as_ref().is_none_or(|(b, _, _)| value > b + TIE_EPS) {
                        best = Some((value, c, workers.to_vec()));
                    }
                }
                Err(e) => failure = Some(e),
            }
        });
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let (_, c, workers) = best.ok_or(Error::Infeasible { workers: n, skills: m })?;
    stats.wall_time = start.elapsed();
    let leader = (strategy == Strategy::Leader).then_some(c);
    finish(strategy, &views[c], project, &norms[c], &workers, leader, stats)
}
