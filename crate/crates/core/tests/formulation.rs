//! Exhaustive checks of the explicit programs on tiny instances.

mod common;

use common::{default_case, injective_maps};
use crowdteam::formulation::{Relation, Variable};
use crowdteam::knowledge::RecruiterId;
use crowdteam::objective::{team_objective, TeamAssignment};
use crowdteam::{build_leader_program, build_platform_program, export_lp, solve_leader, solve_platform, ProgramInstance};

fn x_valid(n: usize, m: usize, x: impl Fn(usize, usize) -> bool) -> bool {
    (0..m).all(|p| (0..n).filter(|&j| x(j, p)).count() == 1) && (0..n).all(|j| (0..m).filter(|&p| x(j, p)).count() <= 1)
}

fn hired(n: usize, m: usize, blocks: usize, program: &ProgramInstance, point: &[bool]) -> Vec<bool> {
    (0..n).map(|j| (0..blocks).any(|i| (0..m).any(|p| point[program.x_index(i, j, p)]))).collect()
}

#[test]
fn platform_feasible_set_is_exactly_the_valid_teams() {
    let (n, m) = (5, 2);
    let c = default_case(n, m, 17);
    let program = build_platform_program(&c.platform, &c.project, &c.platform_norms).unwrap();
    let vars = program.variables.len();
    assert_eq!(vars, n * m + n * (n - 1) / 2);

    let mut feasible = 0usize;
    let mut best = f64::NEG_INFINITY;
    let mut point = vec![false; vars];
    for bits in 0u32..(1 << vars) {
        for (b, slot) in point.iter_mut().enumerate() {
            *slot = bits >> b & 1 == 1;
        }
        let valid_x = x_valid(n, m, |j, p| point[program.x_index(0, j, p)]);
        let h = hired(n, m, 1, &program, &point);
        let v_and = (0..n).all(|a| (a + 1..n).all(|b| point[program.v_index(a, b)] == (h[a] && h[b])));
        assert_eq!(program.is_feasible(&point), valid_x && v_and, "bits {bits:b}");
        if valid_x && v_and {
            feasible += 1;
            let team = program.decode(&point).unwrap();
            team.validate(&c.project, n).unwrap();
            assert_eq!(program.encode(&team).unwrap(), point);
            best = best.max(program.objective_value(&point));
        }
    }
    assert_eq!(feasible, 20);
    let solved = solve_platform(&c.platform, &c.project, &c.platform_norms).unwrap();
    assert!((best - solved.objective).abs() < 1e-9);
}

#[test]
fn platform_program_objective_matches_team_objective() {
    let c = default_case(6, 3, 5);
    let program = build_platform_program(&c.platform, &c.project, &c.platform_norms).unwrap();
    for w in injective_maps(6, 3) {
        let team = TeamAssignment::from_workers_by_skill(RecruiterId::Platform, &c.project, &w, None);
        let point = program.encode(&team).unwrap();
        assert!(program.is_feasible(&point), "{:?}", program.violations(&point));
        assert_eq!(program.decode(&point).unwrap(), team);
        let direct = team_objective(&c.platform, &c.project, &team, &c.platform_norms).unwrap();
        assert!((program.objective_value(&point) - direct).abs() < 1e-12);
    }
}

/// Enumerates every x and y of the leader program, with V and W set to their
/// AND semantics, and compares feasibility against the intended structure.
#[test]
fn leader_feasible_set_is_exactly_the_valid_teams() {
    let (n, m) = (3, 2);
    let c = default_case(n, m, 23);
    let program = build_leader_program(&c.leaders, &c.project, &c.leader_norms).unwrap();
    let counts = program.counts();
    assert_eq!((counts.x, counts.v, counts.y), (n * n * m, 3, n));

    let x_bits = n * n * m;
    let mut point = vec![false; program.variables.len()];
    let mut feasible = 0usize;
    let mut best = f64::NEG_INFINITY;
    for bits in 0u64..(1 << (x_bits + n)) {
        point.iter_mut().for_each(|b| *b = false);
        for i in 0..n {
            for j in 0..n {
                for p in 0..m {
                    point[program.x_index(i, j, p)] = bits >> ((i * n + j) * m + p) & 1 == 1;
                }
            }
            point[program.y_index(i)] = bits >> (x_bits + i) & 1 == 1;
        }
        let h = hired(n, m, n, &program, &point);
        let leaders: Vec<usize> = (0..n).filter(|&i| point[program.y_index(i)]).collect();
        for a in 0..n {
            for b in a + 1..n {
                let v = h[a] && h[b];
                point[program.v_index(a, b)] = v;
                for i in 0..n {
                    point[program.w_index(i, a, b)] = v && point[program.y_index(i)];
                }
            }
        }

        let expected = leaders.len() == 1 && {
            let l = leaders[0];
            let others_empty =
                (0..n).filter(|&i| i != l).all(|i| (0..n).all(|j| (0..m).all(|p| !point[program.x_index(i, j, p)])));
            others_empty
                && x_valid(n, m, |j, p| point[program.x_index(l, j, p)])
                && (0..m).any(|p| point[program.x_index(l, l, p)])
        };
        assert_eq!(program.is_feasible(&point), expected, "bits {bits:b}: {:?}", program.violations(&point));
        if !expected {
            continue;
        }
        feasible += 1;
        let team = program.decode(&point).unwrap();
        team.validate(&c.project, n).unwrap();
        assert_eq!(program.encode(&team).unwrap(), point);
        let l = team.leader.unwrap();
        let direct = team_objective(&c.leaders[l], &c.project, &team, &c.leader_norms[l]).unwrap();
        assert!((program.objective_value(&point) - direct).abs() < 1e-12);
        best = best.max(direct);

        // the linking rows pin every V and W to its AND value
        let links: Vec<usize> = program
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| matches!(v, Variable::V { .. } | Variable::W { .. }))
            .map(|(idx, _)| idx)
            .collect();
        for idx in links {
            point[idx] = !point[idx];
            assert!(!program.is_feasible(&point), "flipping {} stays feasible", program.variables[idx].name());
            point[idx] = !point[idx];
        }
    }
    // each leader: 2 positions, leader takes one of them, the other any of 2 workers
    assert_eq!(feasible, 3 * 2 * 2);
    let solved = solve_leader(&c.leaders, &c.project, &c.leader_norms).unwrap();
    assert!((best - solved.objective).abs() < 1e-9);
}

/// Leader decomposition against the monolithic program: the best feasible
/// point of the Big-M program equals the decomposed solve.
#[test]
fn leader_program_optimum_matches_decomposition() {
    for seed in 0..10 {
        let (n, m) = (5, 2);
        let c = default_case(n, m, seed);
        let program = build_leader_program(&c.leaders, &c.project, &c.leader_norms).unwrap();
        let mut best: Option<(f64, TeamAssignment)> = None;
        for l in 0..n {
            for w in injective_maps(n, m).into_iter().filter(|w| w.contains(&l)) {
                let team = TeamAssignment::from_workers_by_skill(RecruiterId::Worker(l), &c.project, &w, Some(l));
                let point = program.encode(&team).unwrap();
                assert!(program.is_feasible(&point), "{:?}", program.violations(&point));
                let value = program.objective_value(&point);
                if best.as_ref().is_none_or(|(b, _)| value > *b + 1e-10) {
                    best = Some((value, team));
                }
            }
        }
        let (value, team) = best.unwrap();
        let solved = solve_leader(&c.leaders, &c.project, &c.leader_norms).unwrap();
        assert!((solved.objective - value).abs() < 1e-9, "seed {seed}");
        assert_eq!(solved.assignment, team, "seed {seed}");
    }
}

#[test]
fn counts_and_row_shapes() {
    let c = default_case(14, 5, 1);
    let program = build_platform_program(&c.platform, &c.project, &c.platform_norms).unwrap();
    assert_eq!(program.variables.len(), 161);
    assert_eq!(program.constraints.len(), 201);

    let c = default_case(6, 3, 1);
    let program = build_leader_program(&c.leaders, &c.project, &c.leader_norms).unwrap();
    let counts = program.counts();
    assert_eq!((counts.x, counts.v, counts.y), (108, 15, 6));
    for row in &program.constraints {
        assert!(row.terms.iter().all(|&(v, _)| v < program.variables.len()), "{}", row.name);
    }
    let equalities = program.constraints.iter().filter(|r| r.relation == Relation::Eq).count();
    assert!(equalities > 6);
}

#[test]
fn lp_export_sections() {
    let c = default_case(2, 1, 3);
    let program = build_platform_program(&c.platform, &c.project, &c.platform_norms).unwrap();
    let lp = export_lp(&program);
    for section in ["Maximize", "Subject To", "Binary", "End"] {
        assert!(lp.lines().any(|l| l.trim() == section), "missing {section}");
    }
    let binaries: Vec<&str> = lp.split("Binary").nth(1).unwrap().split_whitespace().filter(|t| *t != "End").collect();
    let k = c.project.required_skills()[0];
    assert_eq!(binaries, [format!("X_0_0_{k}"), format!("X_0_1_{k}"), "V_0_1".to_string()]);
    let eq = program.constraints.iter().filter(|r| r.relation == Relation::Eq).count();
    assert_eq!((eq, program.constraints.len()), (1, 5));
    assert_eq!(lp, export_lp(&program));
}
