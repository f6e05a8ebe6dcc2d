#![allow(dead_code)]

use std::path::PathBuf;

use crowdteam::knowledge::{build_leader_views, build_view, RecruiterId, RecruiterView};
use crowdteam::matrix::Matrix;
use crowdteam::objective::{compute_normalizers, Normalizers, Project, DEFAULT_ETA};
use crowdteam::worldgen::{generate_world, AttributeDists, GraphParams, World, WorldConfig};

/// Compares `actual` with `tests/fixtures/<name>`. Set `UPDATE_FIXTURES=1`
/// to (re)write the file.
pub fn check_fixture(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    if std::env::var_os("UPDATE_FIXTURES").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing fixture {} ({e}); run with UPDATE_FIXTURES=1", path.display()));
    assert_eq!(expected, actual, "fixture {name} changed");
}

pub fn world(j: usize, s: usize, k: usize, beta: f64, seed: u64) -> World {
    let config = WorldConfig { workers: j, skills: s, graph: GraphParams { k, beta }, attributes: AttributeDists::default() };
    generate_world(&config, seed).unwrap()
}

/// Lattice degree used for small random instances.
pub fn small_k(j: usize) -> usize {
    if j <= 4 {
        j - 1
    } else {
        2
    }
}

/// A random instance: world, project with `sp` required skills out of `s`,
/// platform view, leader views and the per-view normalizers.
pub struct Case {
    pub world: World,
    pub project: Project,
    pub platform: RecruiterView,
    pub platform_norms: Normalizers,
    pub leaders: Vec<RecruiterView>,
    pub leader_norms: Vec<Normalizers>,
}

pub fn case(j: usize, sp: usize, s: usize, eta: [f64; 4], seed: u64) -> Case {
    let world = world(j, s, small_k(j), 0.3, seed);
    let required: Vec<usize> =
        (0..sp).map(|p| (p * 2 + seed as usize) % s).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let required = if required.len() == sp { required } else { (0..sp).collect() };
    let project = Project::with_skills(s, &required, eta, sp.max(8)).unwrap();
    let platform = build_view(RecruiterId::Platform, &world, 0.3, seed + 1).unwrap();
    let platform_norms = compute_normalizers(&platform, &project);
    let leaders = build_leader_views(&world, 0.3, seed + 1).unwrap();
    let leader_norms = leaders.iter().map(|v| compute_normalizers(v, &project)).collect();
    Case { world, project, platform, platform_norms, leaders, leader_norms }
}

pub fn default_case(j: usize, sp: usize, seed: u64) -> Case {
    case(j, sp, 6, DEFAULT_ETA, seed)
}

/// Max-rule normalizers written out directly from their definition.
pub fn oracle_normalizers(view: &RecruiterView, required: &[usize]) -> [f64; 4] {
    let n = view.uncertainty.len();
    let fallback = |x: f64| if x <= 1e-12 { 1.0 } else { x };
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for j in 0..n {
        for &k in required {
            s = s.max(view.est_skills[(j, k)]);
            c = c.max(view.costs[(j, k)]);
        }
    }
    let u = view.uncertainty.iter().cloned().fold(0.0, f64::max);
    let mut r = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                r = r.max(view.est_relationships[(a, b)]);
            }
        }
    }
    [fallback(s), fallback(u), fallback(c), fallback(r)]
}

/// Objective of a team given as `(worker, skill)` pairs, summing each
/// unordered pair once with twice the pair weight.
pub fn oracle_objective(view: &RecruiterView, eta: [f64; 4], members: &[(usize, usize)], norms: [f64; 4]) -> f64 {
    let [s_bar, u_bar, c_bar, r_bar] = norms;
    let mut value = 0.0;
    for &(j, k) in members {
        value += eta[0] * view.est_skills[(j, k)] / s_bar;
        value -= eta[1] * view.uncertainty[j] / u_bar;
        value -= eta[2] * view.costs[(j, k)] / c_bar;
    }
    let m = members.len();
    if m > 1 {
        let weight = 2.0 * eta[3] / (m as f64 - 1.0);
        for x in 0..m {
            for y in x + 1..m {
                value += weight * view.est_relationships[(members[x].0, members[y].0)] / r_bar;
            }
        }
    }
    value
}

/// Every injective map from required-skill positions to workers.
pub fn injective_maps(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for j in 0..n {
            if !cur.contains(&j) {
                cur.push(j);
                rec(n, m, cur, out);
                cur.pop();
            }
        }
    }
    rec(n, m, &mut cur, &mut out);
    out
}

/// A view with zero uncertainty that sees `world` exactly.
pub fn perfect_view(world: &World, recruiter: RecruiterId) -> RecruiterView {
    RecruiterView {
        recruiter,
        est_skills: world.skills.clone(),
        est_relationships: world.relationships.matrix().clone(),
        uncertainty: vec![0.0; world.num_workers()],
        costs: world.costs.clone(),
    }
}

/// The view restricted to the workers in `keep`, relabelled `0..keep.len()`.
pub fn restrict(view: &RecruiterView, keep: &[usize]) -> RecruiterView {
    let s = view.est_skills.cols();
    RecruiterView {
        recruiter: view.recruiter,
        est_skills: Matrix::from_fn(keep.len(), s, |a, k| view.est_skills[(keep[a], k)]),
        est_relationships: Matrix::from_fn(keep.len(), keep.len(), |a, b| view.est_relationships[(keep[a], keep[b])]),
        uncertainty: keep.iter().map(|&j| view.uncertainty[j]).collect(),
        costs: Matrix::from_fn(keep.len(), s, |a, k| view.costs[(keep[a], k)]),
    }
}
