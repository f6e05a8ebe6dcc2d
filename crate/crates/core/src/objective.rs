//! Team efficiency: the weighted skill / uncertainty / cost / relationship
//! objective a recruiter maximizes, its normalization constants, and the
//! true-valued quality metrics reported by the experiments.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge::{RecruiterId, RecruiterView};
use crate::matrix::Matrix;
use crate::worldgen::World;

/// Default Big-M constant.
pub const DEFAULT_BIG_M: usize = 8;
pub const DEFAULT_ETA: [f64; 4] = [0.25; 4];
const NORM_FLOOR: f64 = 1e-12;

/// A project: which skills it requires, the recruiter's weights
/// `(skill, uncertainty, cost, relationship)` and the Big-M constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    required: Vec<bool>,
    eta: [f64; 4],
    big_m: usize,
}

impl Project {
    pub fn new(required: Vec<bool>, eta: [f64; 4], big_m: usize) -> Result<Self> {
        validate_eta(&eta, 1e-12)?;
        let count = required.iter().filter(|&&r| r).count();
        if count == 0 {
            return Err(Error::param("project must require at least one skill"));
        }
        if big_m < count {
            return Err(Error::param(format!("M={big_m} must be at least |S_p|={count}")));
        }
        Ok(Project { required, eta, big_m })
    }

    /// Project over `num_skills` skills requiring exactly `required`.
    pub fn with_skills(num_skills: usize, required: &[usize], eta: [f64; 4], big_m: usize) -> Result<Self> {
        let mut mask = vec![false; num_skills];
        for &k in required {
            if k >= num_skills {
                return Err(Error::param(format!("required skill {k} out of range for S={num_skills}")));
            }
            mask[k] = true;
        }
        Project::new(mask, eta, big_m)
    }

    /// Draws `sp_size` distinct required skills uniformly from `0..num_skills`.
    pub fn draw<R: Rng + ?Sized>(num_skills: usize, sp_size: usize, eta: [f64; 4], big_m: usize, rng: &mut R) -> Result<Self> {
        if sp_size > num_skills {
            return Err(Error::param(format!("|S_p|={sp_size} exceeds S={num_skills}")));
        }
        let picked = index::sample(rng, num_skills, sp_size).into_vec();
        Project::with_skills(num_skills, &picked, eta, big_m)
    }

    pub fn required(&self) -> &[bool] {
        &self.required
    }

    /// Required skill indices, ascending.
    pub fn required_skills(&self) -> Vec<usize> {
        self.required.iter().enumerate().filter_map(|(k, &r)| r.then_some(k)).collect()
    }

    pub fn team_size(&self) -> usize {
        self.required.iter().filter(|&&r| r).count()
    }

    pub fn num_skills(&self) -> usize {
        self.required.len()
    }

    pub fn eta(&self) -> [f64; 4] {
        self.eta
    }

    pub fn big_m(&self) -> usize {
        self.big_m
    }

    /// `eta_4 / (|S_p| - 1)`, or 0 for single-member teams.
    pub fn pair_weight(&self) -> f64 {
        let m = self.team_size();
        if m <= 1 {
            0.0
        } else {
            self.eta[3] / (m - 1) as f64
        }
    }
}

pub fn validate_eta(eta: &[f64; 4], tol: f64) -> Result<()> {
    if eta.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::param(format!("eta {eta:?} must be nonnegative")));
    }
    let sum: f64 = eta.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::param(format!("eta {eta:?} sums to {sum}, expected 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizers {
    pub s_bar: f64,
    pub u_bar: f64,
    pub c_bar: f64,
    pub r_bar: f64,
}

fn floor(x: f64) -> f64 {
    if x <= NORM_FLOOR {
        1.0
    } else {
        x
    }
}

/// Max-rule normalizers over the required skills; any max at or below
/// `1e-12` falls back to 1.
pub fn compute_normalizers(view: &RecruiterView, project: &Project) -> Normalizers {
    let skills = project.required_skills();
    let n = view.num_workers();
    let mut s_bar = 0.0f64;
    let mut c_bar = 0.0f64;
    for j in 0..n {
        for &k in &skills {
            s_bar = s_bar.max(view.est_skills[(j, k)]);
            c_bar = c_bar.max(view.costs[(j, k)]);
        }
    }
    let u_bar = view.uncertainty.iter().copied().fold(0.0, f64::max);
    let mut r_bar = 0.0f64;
    for a in 0..n {
        for b in a + 1..n {
            r_bar = r_bar.max(view.est_relationships[(a, b)]);
        }
    }
    Normalizers { s_bar: floor(s_bar), u_bar: floor(u_bar), c_bar: floor(c_bar), r_bar: floor(r_bar) }
}

/// How candidate leaders normalize their objectives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizerScope {
    /// Each leader uses the max rule over its own view.
    #[default]
    PerView,
    /// Every leader uses the element-wise max over all views.
    Global,
}

pub fn leader_normalizers(views: &[RecruiterView], project: &Project, scope: NormalizerScope) -> Vec<Normalizers> {
    let own: Vec<Normalizers> = views.iter().map(|v| compute_normalizers(v, project)).collect();
    match scope {
        NormalizerScope::PerView => own,
        NormalizerScope::Global => {
            let global = own.iter().fold(Normalizers { s_bar: 0.0, u_bar: 0.0, c_bar: 0.0, r_bar: 0.0 }, |acc, n| Normalizers {
                s_bar: acc.s_bar.max(n.s_bar),
                u_bar: acc.u_bar.max(n.u_bar),
                c_bar: acc.c_bar.max(n.c_bar),
                r_bar: acc.r_bar.max(n.r_bar),
            });
            vec![global; views.len()]
        }
    }
}

/// A selected team: worker -> contributed skill.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamAssignment {
    pub recruiter: RecruiterId,
    pub members: BTreeMap<usize, usize>,
    pub leader: Option<usize>,
}

impl TeamAssignment {
    pub fn new(recruiter: RecruiterId, members: impl IntoIterator<Item = (usize, usize)>, leader: Option<usize>) -> Self {
        TeamAssignment { recruiter, members: members.into_iter().collect(), leader }
    }

    /// Builds a team from one worker per required skill, in the project's
    /// ascending skill order.
    pub fn from_workers_by_skill(recruiter: RecruiterId, project: &Project, workers: &[usize], leader: Option<usize>) -> Self {
        TeamAssignment::new(recruiter, workers.iter().copied().zip(project.required_skills()), leader)
    }

    /// Member per required skill, in ascending skill order. This is the key
    /// the lexicographic tie-break compares.
    pub fn workers_by_skill(&self) -> Vec<usize> {
        let mut by_skill: Vec<(usize, usize)> = self.members.iter().map(|(&w, &k)| (k, w)).collect();
        by_skill.sort_unstable();
        by_skill.into_iter().map(|(_, w)| w).collect()
    }

    pub fn validate(&self, project: &Project, num_workers: usize) -> Result<()> {
        let required = project.required_skills();
        if self.members.len() != required.len() {
            return Err(Error::contract(format!("team has {} members, project needs {}", self.members.len(), required.len())));
        }
        let mut covered = vec![0usize; project.num_skills()];
        for (&w, &k) in &self.members {
            if w >= num_workers {
                return Err(Error::contract(format!("member {w} out of range")));
            }
            if k >= project.num_skills() || !project.required()[k] {
                return Err(Error::contract(format!("member {w} contributes unrequired skill {k}")));
            }
            covered[k] += 1;
        }
        if required.iter().any(|&k| covered[k] != 1) {
            return Err(Error::contract("required skills must be covered exactly once"));
        }
        if let Some(l) = self.leader {
            if !self.members.contains_key(&l) {
                return Err(Error::contract(format!("leader {l} is not a team member")));
            }
        }
        Ok(())
    }
}

/// Objective value of `team` under `view`.
///
/// The relationship bonus sums over ordered member pairs, i.e. every
/// unordered pair counts twice, with weight `eta_4 / (|S_p| - 1)`.
pub fn team_objective(view: &RecruiterView, project: &Project, team: &TeamAssignment, norms: &Normalizers) -> Result<f64> {
    team.validate(project, view.num_workers())?;
    let [e1, e2, e3, _] = project.eta();
    let mut value = 0.0;
    for (&j, &k) in &team.members {
        value += e1 * view.est_skills[(j, k)] / norms.s_bar
            - e2 * view.uncertainty[j] / norms.u_bar
            - e3 * view.costs[(j, k)] / norms.c_bar;
    }
    let pair_weight = project.pair_weight();
    if pair_weight != 0.0 {
        let mut rel = 0.0;
        for &a in team.members.keys() {
            for &b in team.members.keys() {
                if a != b {
                    rel += view.est_relationships[(a, b)] / norms.r_bar;
                }
            }
        }
        value += pair_weight * rel;
    }
    Ok(value)
}

/// Precomputed objective terms in the form the program builders and the
/// solver consume: a per-(worker, required-skill position) linear term and a
/// per-unordered-pair bonus that already includes the double count.
#[derive(Debug, Clone)]
pub struct Coefficients {
    /// `J x |S_p|`; column `p` is the `p`-th required skill.
    pub linear: Matrix,
    /// `J x J`, symmetric, zero diagonal.
    pub pair: Matrix,
}

impl Coefficients {
    pub fn new(view: &RecruiterView, project: &Project, norms: &Normalizers) -> Self {
        let [e1, e2, e3, _] = project.eta();
        let skills = project.required_skills();
        let n = view.num_workers();
        let linear = Matrix::from_fn(n, skills.len(), |j, p| {
            let k = skills[p];
            e1 * view.est_skills[(j, k)] / norms.s_bar
                - e2 * view.uncertainty[j] / norms.u_bar
                - e3 * view.costs[(j, k)] / norms.c_bar
        });
        let w = 2.0 * project.pair_weight();
        let pair = Matrix::from_fn(n, n, |a, b| if a == b { 0.0 } else { w * view.est_relationships[(a, b)] / norms.r_bar });
        Coefficients { linear, pair }
    }

    /// Value of the team listing one worker per required-skill position.
    pub fn value(&self, workers_by_position: &[usize]) -> f64 {
        let mut value: f64 = workers_by_position.iter().enumerate().map(|(p, &j)| self.linear[(j, p)]).sum();
        for (x, &a) in workers_by_position.iter().enumerate() {
            for &b in &workers_by_position[x + 1..] {
                value += self.pair[(a, b)];
            }
        }
        value
    }
}

/// Quality of a team measured on the true world values, plus the recruiter's
/// own uncertainty and the objective it optimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub avg_skill: f64,
    pub avg_uncertainty: f64,
    pub avg_cost: f64,
    /// Mean true relationship over unordered member pairs; 0 for a single member.
    pub relationship_rate: f64,
    pub objective_value: f64,
}

pub fn evaluate_metrics(
    world: &World,
    view: &RecruiterView,
    project: &Project,
    team: &TeamAssignment,
    norms: &Normalizers,
) -> Result<MetricsRecord> {
    let objective_value = team_objective(view, project, team, norms)?;
    let m = team.members.len() as f64;
    let mut skill = 0.0;
    let mut cost = 0.0;
    let mut unc = 0.0;
    for (&j, &k) in &team.members {
        skill += world.skills[(j, k)];
        cost += world.costs[(j, k)];
        unc += view.uncertainty[j];
    }
    let members: Vec<usize> = team.members.keys().copied().collect();
    let mut rel = 0.0;
    let mut pairs = 0usize;
    for (x, &a) in members.iter().enumerate() {
        for &b in &members[x + 1..] {
            rel += world.relationships.get(a, b);
            pairs += 1;
        }
    }
    Ok(MetricsRecord {
        avg_skill: skill / m,
        avg_uncertainty: unc / m,
        avg_cost: cost / m,
        relationship_rate: if pairs == 0 { 0.0 } else { rel / pairs as f64 },
        objective_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldgen::SocialGraph;

    fn view(skills: Vec<Vec<f64>>, rel: Vec<Vec<f64>>, unc: Vec<f64>, costs: Vec<Vec<f64>>) -> RecruiterView {
        RecruiterView {
            recruiter: RecruiterId::Platform,
            est_skills: Matrix::from_rows(skills).unwrap(),
            est_relationships: Matrix::from_rows(rel).unwrap(),
            uncertainty: unc,
            costs: Matrix::from_rows(costs).unwrap(),
        }
    }

    fn two_worker_view() -> RecruiterView {
        view(
            vec![vec![0.4, 0.1], vec![0.2, 0.6]],
            vec![vec![1.0, 0.5], vec![0.5, 1.0]],
            vec![0.0, 0.0],
            vec![vec![0.3, 0.3], vec![0.3, 0.3]],
        )
    }

    #[test]
    fn eta_validation() {
        assert!(Project::new(vec![true], [0.5, 0.5, 0.0, 0.0], 1).is_ok());
        assert!(Project::new(vec![true], [0.5, 0.6, 0.0, 0.0], 1).is_err());
        assert!(Project::new(vec![true], [1.5, -0.5, 0.0, 0.0], 1).is_err());
        assert!(Project::new(vec![false, false], [1.0, 0.0, 0.0, 0.0], 1).is_err());
        assert!(Project::new(vec![true, true, true], [1.0, 0.0, 0.0, 0.0], 2).is_err());
    }

    #[test]
    fn zero_uncertainty_falls_back_to_unit_normalizer() {
        let v = two_worker_view();
        let p = Project::new(vec![true, true], [1.0, 0.0, 0.0, 0.0], 8).unwrap();
        let n = compute_normalizers(&v, &p);
        assert_eq!(n.u_bar, 1.0);
        assert_eq!(n.s_bar, 0.6);
        assert_eq!(n.c_bar, 0.3);
        assert_eq!(n.r_bar, 0.5);
    }

    #[test]
    fn normalizers_only_look_at_required_skills() {
        let v = two_worker_view();
        let p = Project::new(vec![true, false], [1.0, 0.0, 0.0, 0.0], 8).unwrap();
        assert_eq!(compute_normalizers(&v, &p).s_bar, 0.4);
    }

    #[test]
    fn skill_only_objective() {
        let v = two_worker_view();
        let p = Project::new(vec![true, true], [1.0, 0.0, 0.0, 0.0], 8).unwrap();
        let n = compute_normalizers(&v, &p);
        let team = TeamAssignment::new(RecruiterId::Platform, [(0, 0), (1, 1)], None);
        let value = team_objective(&v, &p, &team, &n).unwrap();
        assert!((value - (0.4 + 0.6) / 0.6).abs() < 1e-9);
        assert!((value - 1.6667).abs() < 1e-4);
    }

    #[test]
    fn single_member_has_no_pair_term() {
        let v = two_worker_view();
        let p = Project::new(vec![false, true], [0.0, 0.0, 0.0, 1.0], 8).unwrap();
        let n = compute_normalizers(&v, &p);
        let team = TeamAssignment::new(RecruiterId::Platform, [(1, 1)], None);
        assert_eq!(team_objective(&v, &p, &team, &n).unwrap(), 0.0);
        assert_eq!(p.pair_weight(), 0.0);
    }

    #[test]
    fn malformed_teams_are_contract_errors() {
        let v = two_worker_view();
        let p = Project::new(vec![true, true], DEFAULT_ETA, 8).unwrap();
        let n = compute_normalizers(&v, &p);
        let dup = TeamAssignment::new(RecruiterId::Platform, [(0, 0), (1, 0)], None);
        assert!(matches!(team_objective(&v, &p, &dup, &n), Err(Error::Contract(_))));
        let short = TeamAssignment::new(RecruiterId::Platform, [(0, 0)], None);
        assert!(matches!(team_objective(&v, &p, &short, &n), Err(Error::Contract(_))));
        let bad_leader = TeamAssignment::new(RecruiterId::Worker(0), [(0, 0), (1, 1)], Some(5));
        assert!(matches!(team_objective(&v, &p, &bad_leader, &n), Err(Error::Contract(_))));
    }

    #[test]
    fn coefficient_table_matches_direct_objective() {
        let v = two_worker_view();
        let p = Project::new(vec![true, true], DEFAULT_ETA, 8).unwrap();
        let n = compute_normalizers(&v, &p);
        let c = Coefficients::new(&v, &p, &n);
        let team = TeamAssignment::from_workers_by_skill(RecruiterId::Platform, &p, &[1, 0], None);
        let direct = team_objective(&v, &p, &team, &n).unwrap();
        assert!((c.value(&[1, 0]) - direct).abs() < 1e-12);
    }

    #[test]
    fn clique_and_identical_worker_metrics() {
        let g = SocialGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let skills = Matrix::from_rows(vec![vec![0.7, 0.7]; 3]).unwrap();
        let costs = Matrix::filled(3, 2, 0.2);
        let w = World::from_parts(g, skills.clone(), costs.clone(), vec![0.5; 3], 0).unwrap();
        let v = RecruiterView {
            recruiter: RecruiterId::Platform,
            est_skills: skills,
            est_relationships: w.relationships.matrix().clone(),
            uncertainty: vec![0.1; 3],
            costs,
        };
        let p = Project::new(vec![true, true], DEFAULT_ETA, 8).unwrap();
        let n = compute_normalizers(&v, &p);
        let team = TeamAssignment::new(RecruiterId::Platform, [(0, 1), (2, 0)], None);
        let m = evaluate_metrics(&w, &v, &p, &team, &n).unwrap();
        assert!((m.avg_skill - 0.7).abs() < 1e-15);
        assert!((m.avg_cost - 0.2).abs() < 1e-15);
        assert!((m.avg_uncertainty - 0.1).abs() < 1e-15);
        assert_eq!(m.relationship_rate, 1.0);
    }
}
