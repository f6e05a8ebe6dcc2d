//! Recruiter knowledge: each recruiter sees skills and relationships through
//! zero-mean Gaussian noise whose scale `U` encodes its confidence in a
//! worker. For the platform the scale shrinks with the worker's history; for
//! a worker acting as leader it grows with social distance.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::worldgen::World;

/// Default noise scale for a maximally uncertain recruiter.
pub const DEFAULT_SIGMA: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecruiterId {
    Platform,
    Worker(usize),
}

impl RecruiterId {
    /// Stream label; the platform is 0 and worker `j` is `j + 1`.
    fn label(self) -> u64 {
        match self {
            RecruiterId::Platform => 0,
            RecruiterId::Worker(j) => j as u64 + 1,
        }
    }
}

/// `U^i_j`: `sigma * (1 - h_j)` for the platform, `sigma * (1 - R_ij)` for a
/// leader `i` (using the true relationship, so 0 for itself and neighbours,
/// `sigma` for workers in another component).
pub fn uncertainty_level(recruiter: RecruiterId, worker: usize, world: &World, sigma_base: f64) -> f64 {
    let scale = match recruiter {
        RecruiterId::Platform => 1.0 - world.histories[worker],
        RecruiterId::Worker(i) => 1.0 - world.relationships.get(i, worker),
    };
    sigma_base * scale.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecruiterView {
    pub recruiter: RecruiterId,
    /// `J x S`, clamped to `[0,1]`.
    pub est_skills: Matrix,
    /// `J x J`, symmetric, clamped to `[0,1]`, unit diagonal.
    pub est_relationships: Matrix,
    pub uncertainty: Vec<f64>,
    /// Known exactly.
    pub costs: Matrix,
}

impl RecruiterView {
    pub fn num_workers(&self) -> usize {
        self.uncertainty.len()
    }

    /// Same view with the estimated relationships replaced by the true ones.
    pub fn with_true_relationships(&self, world: &World) -> RecruiterView {
        RecruiterView { est_relationships: world.relationships.matrix().clone(), ..self.clone() }
    }
}

/// Builds recruiter `recruiter`'s view of `world`.
///
/// One skill error and one relationship error are drawn per worker (as
/// `U_j * z` with `z` standard normal, so the number of draws never depends on
/// `U`). The skill error is shared by all of a worker's skills; a pair's
/// relationship error is the mean of both workers' errors.
pub fn build_view(recruiter: RecruiterId, world: &World, sigma_base: f64, seed: u64) -> Result<RecruiterView> {
    let n = world.num_workers();
    if let RecruiterId::Worker(i) = recruiter {
        if i >= n {
            return Err(Error::param(format!("recruiter worker {i} out of range for {n} workers")));
        }
    }
    if !(sigma_base.is_finite() && sigma_base >= 0.0) {
        return Err(Error::param(format!("sigma_base={sigma_base} must be finite and nonnegative")));
    }

    let uncertainty: Vec<f64> = (0..n).map(|j| uncertainty_level(recruiter, j, world, sigma_base)).collect();
    let mut rng = rng::stream(seed, &[rng::VIEW, recruiter.label()]);
    let mut skill_err = Vec::with_capacity(n);
    let mut rel_err = Vec::with_capacity(n);
    for &u in &uncertainty {
        let zs: f64 = StandardNormal.sample(&mut rng);
        let zr: f64 = StandardNormal.sample(&mut rng);
        skill_err.push(u * zs);
        rel_err.push(u * zr);
    }

    let est_skills = Matrix::from_fn(n, world.num_skills(), |j, k| (world.skills[(j, k)] + skill_err[j]).clamp(0.0, 1.0));
    let est_relationships = Matrix::from_fn(n, n, |a, b| {
        if a == b {
            1.0
        } else {
            (world.relationships.get(a, b) + (rel_err[a] + rel_err[b]) / 2.0).clamp(0.0, 1.0)
        }
    });

    Ok(RecruiterView { recruiter, est_skills, est_relationships, uncertainty, costs: world.costs.clone() })
}

/// Views for every worker `0..J` acting as leader, built in parallel.
pub fn build_leader_views(world: &World, sigma_base: f64, seed: u64) -> Result<Vec<RecruiterView>> {
    use rayon::prelude::*;
    (0..world.num_workers()).into_par_iter().map(|i| build_view(RecruiterId::Worker(i), world, sigma_base, seed)).collect()
}
