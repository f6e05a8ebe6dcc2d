//! Monte-Carlo density sweeps comparing the two recruitment strategies.
//!
//! Each realization `(J, K, index)` draws a world, a project and all recruiter
//! views, solves both strategies on that same world and scores the teams on
//! true values. Attributes, project and noise are keyed by
//! `(master seed, J, index)` and the graph additionally by `K`, so the
//! realizations at different densities are paired.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{build_leader_program, build_platform_program, ProgramInstance, Strategy};
use crate::knowledge::{build_leader_views, build_view, RecruiterId, RecruiterView, DEFAULT_SIGMA};
use crate::objective::{
    compute_normalizers, evaluate_metrics, leader_normalizers, validate_eta, MetricsRecord, NormalizerScope, Project,
    TeamAssignment, DEFAULT_BIG_M, DEFAULT_ETA,
};
use crate::rng;
use crate::solver::{solve_leader, solve_platform, TeamSolution};
use crate::worldgen::{generate_world, AttributeDists, GraphParams, World, WorldConfig};

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "CROWDTEAM_THREADS";

pub const CSV_HEADER: [&str; 11] = [
    "J",
    "K",
    "edge_density",
    "strategy",
    "avg_skill",
    "avg_uncertainty",
    "avg_cost",
    "relationship_rate",
    "mean_objective",
    "n_realizations",
    "n_infeasible",
];

const PROJECT_STREAM: u64 = 11;
const NOISE_STREAM: u64 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub j_list: Vec<usize>,
    pub num_skills: usize,
    pub sp_size: usize,
    pub eta: [f64; 4],
    pub big_m: usize,
    pub sigma_base: f64,
    /// Lattice degrees to sweep; `None` means every even `K < J - 1` plus `J - 1`.
    pub k_list: Option<Vec<usize>>,
    pub beta: f64,
    pub realizations: usize,
    pub seed: u64,
    pub use_true_relationships: bool,
    pub normalizer_scope: NormalizerScope,
    pub attributes: AttributeDists,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            j_list: vec![14, 28],
            num_skills: 8,
            sp_size: 5,
            eta: DEFAULT_ETA,
            big_m: DEFAULT_BIG_M,
            sigma_base: DEFAULT_SIGMA,
            k_list: None,
            beta: 0.3,
            realizations: 1000,
            seed: 0,
            use_true_relationships: false,
            normalizer_scope: NormalizerScope::PerView,
            attributes: AttributeDists::default(),
        }
    }
}

pub fn default_k_values(j: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = (2..j.saturating_sub(1)).step_by(2).collect();
    if j >= 2 {
        ks.push(j - 1);
    }
    ks
}

impl ExperimentConfig {
    pub fn k_values(&self, j: usize) -> Vec<usize> {
        self.k_list.clone().unwrap_or_else(|| default_k_values(j))
    }

    pub fn validate(&self) -> Result<()> {
        validate_eta(&self.eta, 1e-9)?;
        if self.j_list.is_empty() || self.j_list.contains(&0) {
            return Err(Error::param("J list must be non-empty and positive"));
        }
        if self.sp_size == 0 || self.sp_size > self.num_skills {
            return Err(Error::param(format!("need 1 <= |S_p|={} <= S={}", self.sp_size, self.num_skills)));
        }
        if self.big_m < self.sp_size {
            return Err(Error::param(format!("M={} must be at least |S_p|={}", self.big_m, self.sp_size)));
        }
        if !(self.sigma_base.is_finite() && self.sigma_base >= 0.0) {
            return Err(Error::param("sigma must be finite and nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::param(format!("beta={} outside [0,1]", self.beta)));
        }
        for &j in &self.j_list {
            for k in self.k_values(j) {
                if k + 1 != j && (k % 2 != 0 || k >= j || j < 3) {
                    return Err(Error::param(format!("K={k} invalid for J={j}: must be even and below J, or J-1")));
                }
            }
        }
        Ok(())
    }

    pub fn world_seed(&self, j: usize, index: usize) -> u64 {
        rng::derive(self.seed, &[j as u64, index as u64])
    }

    pub fn world_config(&self, j: usize, k: usize) -> WorldConfig {
        WorldConfig {
            workers: j,
            skills: self.num_skills,
            graph: GraphParams { k, beta: self.beta },
            attributes: self.attributes,
        }
    }
}

/// One strategy's result within a realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyRecord {
    pub metrics: MetricsRecord,
    pub team: TeamAssignment,
    /// Fingerprint of the world the strategy was solved on.
    pub world_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationOutcome {
    pub j: usize,
    pub k: usize,
    pub index: usize,
    pub edge_density: f64,
    /// `None` when the instance is infeasible.
    pub platform: Option<StrategyRecord>,
    pub leader: Option<StrategyRecord>,
}

impl RealizationOutcome {
    pub fn record(&self, strategy: Strategy) -> Option<&StrategyRecord> {
        match strategy {
            Strategy::Platform => self.platform.as_ref(),
            Strategy::Leader => self.leader.as_ref(),
        }
    }
}

/// A solvable instance: world, project and the seed every recruiter's noise
/// stream derives from.
#[derive(Debug, Clone)]
pub struct Instance {
    pub world: World,
    pub project: Project,
    pub noise_seed: u64,
}

/// Builds the instance keyed by `seed` with lattice degree `k`.
pub fn build_instance(config: &ExperimentConfig, j: usize, k: usize, seed: u64) -> Result<Instance> {
    let world = generate_world(&config.world_config(j, k), seed)?;
    let mut project_rng = rng::stream(seed, &[PROJECT_STREAM]);
    let project = Project::draw(config.num_skills, config.sp_size, config.eta, config.big_m, &mut project_rng)?;
    Ok(Instance { world, project, noise_seed: rng::derive(seed, &[NOISE_STREAM]) })
}

/// The instance of realization `(J, K, index)`.
pub fn realization_instance(config: &ExperimentConfig, j: usize, k: usize, index: usize) -> Result<Instance> {
    build_instance(config, j, k, config.world_seed(j, index))
}

impl Instance {
    fn objective_view(&self, view: RecruiterView, config: &ExperimentConfig) -> RecruiterView {
        if config.use_true_relationships {
            view.with_true_relationships(&self.world)
        } else {
            view
        }
    }

    pub fn platform_view(&self, config: &ExperimentConfig) -> Result<RecruiterView> {
        let view = build_view(RecruiterId::Platform, &self.world, config.sigma_base, self.noise_seed)?;
        Ok(self.objective_view(view, config))
    }

    pub fn leader_views(&self, config: &ExperimentConfig) -> Result<Vec<RecruiterView>> {
        Ok(build_leader_views(&self.world, config.sigma_base, self.noise_seed)?
            .into_iter()
            .map(|v| self.objective_view(v, config))
            .collect())
    }

    /// Explicit 0-1 program for `strategy`.
    pub fn program(&self, config: &ExperimentConfig, strategy: Strategy) -> Result<ProgramInstance> {
        match strategy {
            Strategy::Platform => {
                let view = self.platform_view(config)?;
                build_platform_program(&view, &self.project, &compute_normalizers(&view, &self.project))
            }
            Strategy::Leader => {
                let views = self.leader_views(config)?;
                let norms = leader_normalizers(&views, &self.project, config.normalizer_scope);
                build_leader_program(&views, &self.project, &norms)
            }
        }
    }

    /// Solves `strategy` and scores the team on true values.
    pub fn solve(&self, config: &ExperimentConfig, strategy: Strategy) -> Result<(TeamSolution, MetricsRecord)> {
        let (project, world) = (&self.project, &self.world);
        match strategy {
            Strategy::Platform => {
                let view = self.platform_view(config)?;
                let norms = compute_normalizers(&view, project);
                let solution = solve_platform(&view, project, &norms)?;
                let metrics = evaluate_metrics(world, &view, project, &solution.assignment, &norms)?;
                Ok((solution, metrics))
            }
            Strategy::Leader => {
                let views = self.leader_views(config)?;
                let norms = leader_normalizers(&views, project, config.normalizer_scope);
                let solution = solve_leader(&views, project, &norms)?;
                let leader = solution.assignment.leader.expect("leader solutions carry a leader");
                let metrics = evaluate_metrics(world, &views[leader], project, &solution.assignment, &norms[leader])?;
                Ok((solution, metrics))
            }
        }
    }

    fn record(&self, config: &ExperimentConfig, strategy: Strategy) -> Result<Option<StrategyRecord>> {
        match self.solve(config, strategy) {
            Ok((solution, metrics)) => {
                Ok(Some(StrategyRecord { metrics, team: solution.assignment, world_fingerprint: self.world.fingerprint() }))
            }
            Err(Error::Infeasible { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// Runs both strategies on one realization. Infeasible strategies are
/// recorded as `None`, not returned as errors.
pub fn run_realization(config: &ExperimentConfig, j: usize, k: usize, index: usize) -> Result<RealizationOutcome> {
    let instance = realization_instance(config, j, k, index)?;
    let platform = instance.record(config, Strategy::Platform)?;
    let leader = instance.record(config, Strategy::Leader)?;
    Ok(RealizationOutcome { j, k, index, edge_density: instance.world.graph.edge_density(), platform, leader })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub j: usize,
    pub k: usize,
    pub edge_density: f64,
    pub strategy: Strategy,
    pub avg_skill: f64,
    pub avg_uncertainty: f64,
    pub avg_cost: f64,
    pub relationship_rate: f64,
    pub mean_objective: f64,
    pub n_realizations: usize,
    pub n_infeasible: usize,
}

impl SweepRow {
    fn aggregate(outcomes: &[RealizationOutcome], strategy: Strategy) -> SweepRow {
        let first = &outcomes[0];
        let records: Vec<&MetricsRecord> = outcomes.iter().filter_map(|o| o.record(strategy)).map(|r| &r.metrics).collect();
        let avg = |f: fn(&MetricsRecord) -> f64| {
            if records.is_empty() {
                f64::NAN
            } else {
                records.iter().map(|m| f(m)).sum::<f64>() / records.len() as f64
            }
        };
        SweepRow {
            j: first.j,
            k: first.k,
            edge_density: outcomes.iter().map(|o| o.edge_density).sum::<f64>() / outcomes.len() as f64,
            strategy,
            avg_skill: avg(|m| m.avg_skill),
            avg_uncertainty: avg(|m| m.avg_uncertainty),
            avg_cost: avg(|m| m.avg_cost),
            relationship_rate: avg(|m| m.relationship_rate),
            mean_objective: avg(|m| m.objective_value),
            n_realizations: outcomes.len(),
            n_infeasible: outcomes.len() - records.len(),
        }
    }

    fn csv_record(&self) -> [String; 11] {
        let f = |x: f64| format!("{x:.6}");
        [
            self.j.to_string(),
            self.k.to_string(),
            f(self.edge_density),
            self.strategy.to_string(),
            f(self.avg_skill),
            f(self.avg_uncertainty),
            f(self.avg_cost),
            f(self.relationship_rate),
            f(self.mean_objective),
            self.n_realizations.to_string(),
            self.n_infeasible.to_string(),
        ]
    }
}

/// How realizations are scheduled. Results never depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// `None` uses the machine's parallelism.
    Parallel {
        threads: Option<usize>,
    },
}

impl Execution {
    /// Parallel, capped by `CROWDTEAM_THREADS` when set to a positive integer.
    pub fn from_env() -> Result<Execution> {
        match std::env::var(THREADS_ENV) {
            Err(_) => Ok(Execution::Parallel { threads: None }),
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(0) | Err(_) => Err(Error::param(format!("{THREADS_ENV}='{v}' must be a positive integer"))),
                Ok(1) => Ok(Execution::Serial),
                Ok(n) => Ok(Execution::Parallel { threads: Some(n) }),
            },
        }
    }
}

/// Realizations of one `(J, K)` cell, by index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub j: usize,
    pub k: usize,
    pub outcomes: Vec<RealizationOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Two rows (platform then leader) per `(J, K)`, in sweep order.
    pub rows: Vec<SweepRow>,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, j: usize, k: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.j == j && c.k == k)
    }

    pub fn row(&self, j: usize, k: usize, strategy: Strategy) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.j == j && r.k == k && r.strategy == strategy)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        write_csv(&self.rows, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        write_csv(&self.rows, &mut file)?;
        file.flush()?;
        Ok(())
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for row in rows {
        writer.write_record(row.csv_record())?;
    }
    writer.flush()?;
    Ok(())
}

/// Runs every `(J, K, index)` realization and aggregates per `(J, K)`.
pub fn sweep(config: &ExperimentConfig, execution: Execution) -> Result<SweepResult> {
    config.validate()?;
    if config.realizations == 0 {
        return Err(Error::param("need at least one realization"));
    }
    let cells: Vec<(usize, usize)> =
        config.j_list.iter().flat_map(|&j| config.k_values(j).into_iter().map(move |k| (j, k))).collect();
    let tasks: Vec<(usize, usize, usize)> =
        cells.iter().flat_map(|&(j, k)| (0..config.realizations).map(move |i| (j, k, i))).collect();

    let run = |&(j, k, i): &(usize, usize, usize)| run_realization(config, j, k, i);
    let outcomes: Vec<RealizationOutcome> = match execution {
        Execution::Serial => tasks.iter().map(run).collect::<Result<_>>()?,
        Execution::Parallel { threads } => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(t) = threads {
                builder = builder.num_threads(t);
            }
            let pool = builder.build().map_err(|e| Error::param(format!("thread pool: {e}")))?;
            pool.install(|| tasks.par_iter().map(run).collect::<Result<_>>())?
        }
    };

    let mut rows = Vec::with_capacity(cells.len() * 2);
    let mut grouped = Vec::with_capacity(cells.len());
    for (chunk, &(j, k)) in outcomes.chunks(config.realizations).zip(&cells) {
        rows.push(SweepRow::aggregate(chunk, Strategy::Platform));
        rows.push(SweepRow::aggregate(chunk, Strategy::Leader));
        grouped.push(SweepCell { j, k, outcomes: chunk.to_vec() });
    }
    Ok(SweepResult { rows, cells: grouped })
}
