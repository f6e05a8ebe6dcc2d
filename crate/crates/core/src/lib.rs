//! Optimal team recruitment for collaborative mobile crowdsourcing.
//!
//! A world of workers with skills, costs and platform histories lives on a
//! small-world social graph. A recruiter (the platform, or a worker acting as
//! team leader) sees that world through noise scaled by its confidence, and
//! hires one distinct worker per required project skill so as to maximize a
//! weighted skill / confidence / cost / relationship objective.
//!
//! - [`worldgen`]: Watts-Strogatz graph, hop-based relationships, attributes.
//! - [`knowledge`]: per-recruiter noisy views and uncertainty levels.
//! - [`objective`]: projects, normalizers, team objective and true metrics.
//! - [`formulation`]: explicit 0-1 programs and LP-format export.
//! - [`solver`]: exact branch and bound plus a brute-force oracle.
//! - [`experiments`]: Monte-Carlo density sweeps and CSV output.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod formulation;
pub mod knowledge;
pub mod matrix;
pub mod objective;
pub mod rng;
pub mod solver;
pub mod stats;
pub mod worldgen;

pub use error::{Error, Result};
pub use formulation::{build_leader_program, build_platform_program, export_lp, ProgramInstance, Strategy};
pub use knowledge::{build_leader_views, build_view, uncertainty_level, RecruiterId, RecruiterView};
pub use objective::{compute_normalizers, evaluate_metrics, team_objective, MetricsRecord, Normalizers, Project, TeamAssignment};
pub use solver::{brute_force_oracle, solve_leader, solve_platform, TeamSolution};
pub use worldgen::{generate_graph, generate_world, relationship_matrix, RelationshipMatrix, SocialGraph, World};
