//! Explicit 0-1 programs for both recruitment strategies and an LP-format
//! exporter for cross-checking with external MILP solvers.
//!
//! Variable layout (all binary):
//! - `X_i_j_k`: recruiter `i` hires worker `j` for required skill `k`
//!   (`i = 0` in the platform program, `i` = leader candidate otherwise).
//! - `V_j_jp`: workers `j < jp` are both hired. Stored once per unordered
//!   pair; `v_jj = 0` and symmetry are structural.
//! - `Y_i`: worker `i` is the leader (leader program only).
//! - `W_i_j_jp`: `V_j_jp AND Y_i`, carrying leader `i`'s own relationship
//!   bonus (leader program only).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge::{RecruiterId, RecruiterView};
use crate::objective::{Coefficients, Normalizers, Project, TeamAssignment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Platform,
    Leader,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Platform => "platform",
            Strategy::Leader => "leader",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "platform" => Ok(Strategy::Platform),
            "leader" => Ok(Strategy::Leader),
            other => Err(Error::param(format!("unknown strategy '{other}' (expected platform|leader)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    X { i: usize, j: usize, k: usize },
    V { j: usize, jp: usize },
    Y { i: usize },
    W { i: usize, j: usize, jp: usize },
}

impl Variable {
    pub fn name(&self) -> String {
        match *self {
            Variable::X { i, j, k } => format!("X_{i}_{j}_{k}"),
            Variable::V { j, jp } => format!("V_{j}_{jp}"),
            Variable::Y { i } => format!("Y_{i}"),
            Variable::W { i, j, jp } => format!("W_{i}_{j}_{jp}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// `(variable index, coefficient)`.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    fn holds(&self, point: &[bool]) -> bool {
        let lhs: f64 = self.terms.iter().filter(|(v, _)| point[*v]).map(|(_, c)| c).sum();
        const TOL: f64 = 1e-9;
        match self.relation {
            Relation::Le => lhs <= self.rhs + TOL,
            Relation::Ge => lhs >= self.rhs - TOL,
            Relation::Eq => (lhs - self.rhs).abs() <= TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramInstance {
    pub strategy: Strategy,
    pub num_workers: usize,
    pub required_skills: Vec<usize>,
    pub big_m: usize,
    pub variables: Vec<Variable>,
    /// Sparse maximization objective.
    pub objective: Vec<(usize, f64)>,
    pub constraints: Vec<Constraint>,
}

/// Position of `(j, jp)`, `j < jp`, in row-major order of unordered pairs.
fn pair_index(n: usize, j: usize, jp: usize) -> usize {
    debug_assert!(j < jp && jp < n);
    j * (2 * n - j - 1) / 2 + (jp - j - 1)
}

fn num_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableCounts {
    pub x: usize,
    pub v: usize,
    pub y: usize,
    pub w: usize,
}

impl ProgramInstance {
    pub fn team_size(&self) -> usize {
        self.required_skills.len()
    }

    fn blocks(&self) -> usize {
        match self.strategy {
            Strategy::Platform => 1,
            Strategy::Leader => self.num_workers,
        }
    }

    /// Index of `X` for block `i`, worker `j`, required-skill position `p`.
    pub fn x_index(&self, i: usize, j: usize, p: usize) -> usize {
        let (n, m) = (self.num_workers, self.team_size());
        (i * n + j) * m + p
    }

    pub fn v_index(&self, j: usize, jp: usize) -> usize {
        let (lo, hi) = if j < jp { (j, jp) } else { (jp, j) };
        self.blocks() * self.num_workers * self.team_size() + pair_index(self.num_workers, lo, hi)
    }

    pub fn y_index(&self, i: usize) -> usize {
        debug_assert_eq!(self.strategy, Strategy::Leader);
        self.blocks() * self.num_workers * self.team_size() + num_pairs(self.num_workers) + i
    }

    pub fn w_index(&self, i: usize, j: usize, jp: usize) -> usize {
        let n = self.num_workers;
        let (lo, hi) = if j < jp { (j, jp) } else { (jp, j) };
        n * n * self.team_size() + num_pairs(n) + n + i * num_pairs(n) + pair_index(n, lo, hi)
    }

    pub fn counts(&self) -> VariableCounts {
        let mut c = VariableCounts { x: 0, v: 0, y: 0, w: 0 };
        for v in &self.variables {
            match v {
                Variable::X { .. } => c.x += 1,
                Variable::V { .. } => c.v += 1,
                Variable::Y { .. } => c.y += 1,
                Variable::W { .. } => c.w += 1,
            }
        }
        c
    }

    pub fn objective_value(&self, point: &[bool]) -> f64 {
        self.objective.iter().filter(|(v, _)| point[*v]).map(|(_, c)| c).sum()
    }

    /// Names of the constraints `point` violates.
    pub fn violations(&self, point: &[bool]) -> Vec<&str> {
        self.constraints.iter().filter(|c| !c.holds(point)).map(|c| c.name.as_str()).collect()
    }

    pub fn is_feasible(&self, point: &[bool]) -> bool {
        point.len() == self.variables.len() && self.constraints.iter().all(|c| c.holds(point))
    }

    /// The 0/1 point representing `team`, with `V`, `Y` and `W` set to their
    /// AND semantics.
    pub fn encode(&self, team: &TeamAssignment) -> Result<Vec<bool>> {
        let n = self.num_workers;
        let block = match (self.strategy, team.leader) {
            (Strategy::Platform, None) => 0,
            (Strategy::Leader, Some(l)) if l < n => l,
            _ => return Err(Error::contract("team leader does not match the program strategy")),
        };
        let mut point = vec![false; self.variables.len()];
        let mut hired = vec![false; n];
        for (&j, &k) in &team.members {
            let p = self
                .required_skills
                .iter()
                .position(|&s| s == k)
                .ok_or_else(|| Error::contract(format!("skill {k} is not required")))?;
            if j >= n {
                return Err(Error::contract(format!("worker {j} out of range")));
            }
            point[self.x_index(block, j, p)] = true;
            hired[j] = true;
        }
        for a in 0..n {
            for b in a + 1..n {
                if hired[a] && hired[b] {
                    point[self.v_index(a, b)] = true;
                    if self.strategy == Strategy::Leader {
                        point[self.w_index(block, a, b)] = true;
                    }
                }
            }
        }
        if self.strategy == Strategy::Leader {
            point[self.y_index(block)] = true;
        }
        Ok(point)
    }

    /// Reads the team out of a feasible point.
    pub fn decode(&self, point: &[bool]) -> Result<TeamAssignment> {
        if !self.is_feasible(point) {
            return Err(Error::contract("point violates the program"));
        }
        let n = self.num_workers;
        let (block, recruiter, leader) = match self.strategy {
            Strategy::Platform => (0, RecruiterId::Platform, None),
            Strategy::Leader => {
                let l = (0..n).find(|&i| point[self.y_index(i)]).ok_or_else(|| Error::contract("no leader selected"))?;
                (l, RecruiterId::Worker(l), Some(l))
            }
        };
        let mut members = Vec::new();
        for j in 0..n {
            for (p, &k) in self.required_skills.iter().enumerate() {
                if point[self.x_index(block, j, p)] {
                    members.push((j, k));
                }
            }
        }
        Ok(TeamAssignment::new(recruiter, members, leader))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

struct Builder {
    program: ProgramInstance,
}

impl Builder {
    fn new(strategy: Strategy, project: &Project, n: usize) -> Self {
        let required_skills = project.required_skills();
        let blocks = if strategy == Strategy::Leader { n } else { 1 };
        let mut variables = Vec::new();
        for i in 0..blocks {
            for j in 0..n {
                for &k in &required_skills {
                    variables.push(Variable::X { i, j, k });
                }
            }
        }
        for j in 0..n {
            for jp in j + 1..n {
                variables.push(Variable::V { j, jp });
            }
        }
        if strategy == Strategy::Leader {
            variables.extend((0..n).map(|i| Variable::Y { i }));
            for i in 0..n {
                for j in 0..n {
                    for jp in j + 1..n {
                        variables.push(Variable::W { i, j, jp });
                    }
                }
            }
        }
        Builder {
            program: ProgramInstance {
                strategy,
                num_workers: n,
                required_skills,
                big_m: project.big_m(),
                variables,
                objective: Vec::new(),
                constraints: Vec::new(),
            },
        }
    }

    fn row(&mut self, name: String, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.program.constraints.push(Constraint { name, terms, relation, rhs });
    }

    /// All `X` of worker `j`, across every block and skill.
    fn worker_terms(&self, j: usize, coef: f64) -> Vec<(usize, f64)> {
        let p = &self.program;
        (0..p.blocks()).flat_map(|i| (0..p.team_size()).map(move |s| (p.x_index(i, j, s), coef))).collect()
    }

    fn common_rows(&mut self) {
        let n = self.program.num_workers;
        for j in 0..n {
            let terms = self.worker_terms(j, 1.0);
            self.row(format!("one_skill_{j}"), terms, Relation::Le, 1.0);
        }
        let (blocks, m) = (self.program.blocks(), self.program.team_size());
        for p in 0..m {
            let k = self.program.required_skills[p];
            let terms = (0..blocks)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| (self.program.x_index(i, j, p), 1.0))
                .collect();
            self.row(format!("cover_{k}"), terms, Relation::Eq, 1.0);
        }
        for j in 0..n {
            for jp in j + 1..n {
                let v = self.program.v_index(j, jp);
                let mut lo = self.worker_terms(j, 1.0);
                lo.extend(self.worker_terms(jp, 1.0));
                lo.push((v, -2.0));
                self.row(format!("pair_lo_{j}_{jp}"), lo, Relation::Ge, 0.0);
                let mut hi = vec![(v, 1.0)];
                hi.extend(self.worker_terms(j, -1.0));
                hi.extend(self.worker_terms(jp, -1.0));
                self.row(format!("pair_hi_{j}_{jp}"), hi, Relation::Ge, -1.0);
            }
        }
    }

    fn add_objective(&mut self, block: usize, coefficients: &Coefficients) {
        let n = self.program.num_workers;
        for j in 0..n {
            for p in 0..self.program.team_size() {
                let idx = self.program.x_index(block, j, p);
                self.program.objective.push((idx, coefficients.linear[(j, p)]));
            }
        }
        for j in 0..n {
            for jp in j + 1..n {
                let idx = match self.program.strategy {
                    Strategy::Platform => self.program.v_index(j, jp),
                    Strategy::Leader => self.program.w_index(block, j, jp),
                };
                self.program.objective.push((idx, coefficients.pair[(j, jp)]));
            }
        }
    }
}

/// Platform-recruited team program.
pub fn build_platform_program(view: &RecruiterView, project: &Project, norms: &Normalizers) -> Result<ProgramInstance> {
    if view.recruiter != RecruiterId::Platform {
        return Err(Error::param("platform program needs the platform's view"));
    }
    if project.team_size() == 0 {
        return Err(Error::param("project requires no skills"));
    }
    let mut b = Builder::new(Strategy::Platform, project, view.num_workers());
    b.add_objective(0, &Coefficients::new(view, project, norms));
    b.common_rows();
    Ok(b.program)
}

/// Leader-recruited team program; `views[i]` and `norms[i]` belong to worker `i`.
///
/// Besides the rows shared with the platform program, each candidate `i`
/// gets the four Big-M rows tying its block size to `y_i`, a self-selection
/// row `sum_k x^i_ik = y_i`, and the three AND rows defining `W_i_j_jp`. A
/// final row makes the leader unique.
pub fn build_leader_program(views: &[RecruiterView], project: &Project, norms: &[Normalizers]) -> Result<ProgramInstance> {
    let n = views.len();
    if n == 0 {
        return Err(Error::param("leader program needs one view per worker"));
    }
    if norms.len() != n {
        return Err(Error::param(format!("{} normalizer sets for {n} views", norms.len())));
    }
    for (i, v) in views.iter().enumerate() {
        if v.recruiter != RecruiterId::Worker(i) || v.num_workers() != n {
            return Err(Error::param(format!("view {i} must be worker {i}'s view of {n} workers")));
        }
    }
    let mut b = Builder::new(Strategy::Leader, project, n);
    for i in 0..n {
        b.add_objective(i, &Coefficients::new(&views[i], project, &norms[i]));
    }
    b.common_rows();

    let m = project.team_size();
    let big_m = project.big_m() as f64;
    for i in 0..n {
        let y = b.program.y_index(i);
        let block: Vec<(usize, f64)> =
            (0..n).flat_map(|j| (0..m).map(move |p| (j, p))).map(|(j, p)| (b.program.x_index(i, j, p), 1.0)).collect();
        let with_y = |coef: f64| {
            let mut t = block.clone();
            t.push((y, coef));
            t
        };
        let (upper, lower, cap, floor) = (with_y(big_m), with_y(-big_m), with_y(-big_m), with_y(big_m));
        b.row(format!("bigm_upper_{i}"), upper, Relation::Le, big_m + m as f64);
        b.row(format!("bigm_lower_{i}"), lower, Relation::Ge, m as f64 - big_m);
        b.row(format!("bigm_cap_{i}"), cap, Relation::Le, 0.0);
        b.row(format!("bigm_floor_{i}"), floor, Relation::Ge, 0.0);

        let mut own: Vec<(usize, f64)> = (0..m).map(|p| (b.program.x_index(i, i, p), 1.0)).collect();
        own.push((y, -1.0));
        b.row(format!("leader_member_{i}"), own, Relation::Eq, 0.0);
    }
    let unique = (0..n).map(|i| (b.program.y_index(i), 1.0)).collect();
    b.row("leader_unique".into(), unique, Relation::Eq, 1.0);

    for i in 0..n {
        let y = b.program.y_index(i);
        for j in 0..n {
            for jp in j + 1..n {
                let (w, v) = (b.program.w_index(i, j, jp), b.program.v_index(j, jp));
                b.row(format!("w_pair_{i}_{j}_{jp}"), vec![(w, 1.0), (v, -1.0)], Relation::Le, 0.0);
                b.row(format!("w_lead_{i}_{j}_{jp}"), vec![(w, 1.0), (y, -1.0)], Relation::Le, 0.0);
                b.row(format!("w_and_{i}_{j}_{jp}"), vec![(w, 1.0), (v, -1.0), (y, -1.0)], Relation::Ge, -1.0);
            }
        }
    }
    Ok(b.program)
}

const LINE_WIDTH: usize = 78;

fn write_terms(out: &mut String, label: &str, terms: &[(usize, f64)], vars: &[Variable]) {
    let mut line = format!(" {label}:");
    let mut first = true;
    for &(idx, coef) in terms {
        if coef == 0.0 {
            continue;
        }
        let name = vars[idx].name();
        let mag = coef.abs();
        let sign = if coef < 0.0 {
            "-"
        } else if first {
            ""
        } else {
            "+"
        };
        let body = if mag == 1.0 { name } else { format!("{mag:?} {name}") };
        let term = if sign.is_empty() { body } else { format!("{sign} {body}") };
        if line.len() + term.len() + 1 > LINE_WIDTH && !first {
            out.push_str(&line);
            out.push('\n');
            line = String::from("   ");
        }
        line.push(' ');
        line.push_str(&term);
        first = false;
    }
    if first {
        // empty expression
        let _ = write!(line, " 0 {}", vars[terms.first().map_or(0, |t| t.0)].name());
    }
    out.push_str(&line);
}

/// LP-format text (`Maximize` / `Subject To` / `Binary` / `End`).
/// Output depends only on the program, so repeated exports are byte-identical.
pub fn export_lp(program: &ProgramInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ crowdteam {} program: J={} |S_p|={} M={}",
        program.strategy,
        program.num_workers,
        program.team_size(),
        program.big_m
    );
    out.push_str("Maximize\n");
    write_terms(&mut out, "obj", &program.objective, &program.variables);
    out.push_str("\nSubject To\n");
    for c in &program.constraints {
        write_terms(&mut out, &c.name, &c.terms, &program.variables);
        let _ = writeln!(out, " {} {:?}", c.relation.symbol(), c.rhs);
    }
    out.push_str("Binary\n");
    for v in &program.variables {
        let _ = writeln!(out, " {}", v.name());
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{build_leader_views, build_view};
    use crate::objective::{compute_normalizers, DEFAULT_ETA};
    use crate::worldgen::{generate_world, AttributeDists, GraphParams, World, WorldConfig};

    fn world(n: usize, s: usize, seed: u64) -> World {
        let k = if n <= 3 { n - 1 } else { 2 };
        let cfg =
            WorldConfig { workers: n, skills: s, graph: GraphParams { k, beta: 0.3 }, attributes: AttributeDists::default() };
        generate_world(&cfg, seed).unwrap()
    }

    fn platform(n: usize, sp: usize) -> ProgramInstance {
        let w = world(n, sp.max(2), 1);
        let v = build_view(RecruiterId::Platform, &w, 0.3, 2).unwrap();
        let p = Project::with_skills(w.num_skills(), &(0..sp).collect::<Vec<_>>(), DEFAULT_ETA, 8).unwrap();
        build_platform_program(&v, &p, &compute_normalizers(&v, &p)).unwrap()
    }

    #[test]
    fn platform_counts() {
        let prog = platform(14, 5);
        assert_eq!(prog.counts(), VariableCounts { x: 70, v: 91, y: 0, w: 0 });
        assert_eq!(prog.variables.len(), 161);
        assert_eq!(prog.constraints.len(), 14 + 5 + 2 * 91);
    }

    #[test]
    fn leader_counts() {
        let w = world(6, 3, 4);
        let views = build_leader_views(&w, 0.3, 3).unwrap();
        let p = Project::with_skills(3, &[0, 1, 2], DEFAULT_ETA, 8).unwrap();
        let norms: Vec<_> = views.iter().map(|v| compute_normalizers(v, &p)).collect();
        let prog = build_leader_program(&views, &p, &norms).unwrap();
        let c = prog.counts();
        assert_eq!((c.x, c.y, c.v), (108, 6, 15));
        assert_eq!(c.w, 6 * 15);
    }

    #[test]
    fn indices_match_variable_table() {
        let w = world(5, 2, 4);
        let views = build_leader_views(&w, 0.3, 3).unwrap();
        let p = Project::with_skills(2, &[0, 1], DEFAULT_ETA, 8).unwrap();
        let norms: Vec<_> = views.iter().map(|v| compute_normalizers(v, &p)).collect();
        let prog = build_leader_program(&views, &p, &norms).unwrap();
        for (idx, var) in prog.variables.iter().enumerate() {
            let expect = match *var {
                Variable::X { i, j, k } => prog.x_index(i, j, prog.required_skills.iter().position(|&s| s == k).unwrap()),
                Variable::V { j, jp } => prog.v_index(j, jp),
                Variable::Y { i } => prog.y_index(i),
                Variable::W { i, j, jp } => prog.w_index(i, j, jp),
            };
            assert_eq!(idx, expect, "{var:?}");
        }
    }

    #[test]
    fn wrong_view_kind_rejected() {
        let w = world(5, 2, 4);
        let views = build_leader_views(&w, 0.3, 3).unwrap();
        let p = Project::with_skills(2, &[0, 1], DEFAULT_ETA, 8).unwrap();
        let n = compute_normalizers(&views[0], &p);
        assert!(build_platform_program(&views[0], &p, &n).is_err());
        assert!(build_leader_program(&views[..4], &p, &[n; 4]).is_err());
        assert!(build_leader_program(&views, &p, &[n; 4]).is_err());
    }

    fn section<'a>(lp: &'a str, start: &str, end: &str) -> Vec<&'a str> {
        let from = lp.find(start).unwrap() + start.len();
        let to = lp[from..].find(end).unwrap() + from;
        lp[from..to].lines().filter(|l| !l.trim().is_empty()).collect()
    }

    #[test]
    fn tiny_lp_export_layout() {
        let prog = platform(2, 1);
        let lp = export_lp(&prog);
        let binaries = section(&lp, "Binary\n", "End");
        assert_eq!(binaries, vec![" X_0_0_0", " X_0_1_0", " V_0_1"]);
        let rows = section(&lp, "Subject To\n", "Binary");
        assert_eq!(rows.len(), 5);
        assert_eq!(rows.iter().filter(|r| r.contains(" = ")).count(), 1);
        assert_eq!(rows.iter().filter(|r| r.starts_with(" one_skill_") && r.contains("<=")).count(), 2);
        assert_eq!(rows.iter().filter(|r| r.starts_with(" pair_")).count(), 2);
        assert!(lp.starts_with("\\ crowdteam platform program"));
        assert!(lp.contains("\nMaximize\n obj: "));
        assert!(lp.ends_with("End\n"));
        assert_eq!(lp, export_lp(&prog));
    }

    #[test]
    fn long_rows_wrap_onto_continuation_lines() {
        let lp = export_lp(&platform(14, 5));
        assert!(lp.lines().all(|l| l.len() <= LINE_WIDTH + 40));
        assert!(lp.lines().any(|l| l.starts_with("   ")));
    }
}
