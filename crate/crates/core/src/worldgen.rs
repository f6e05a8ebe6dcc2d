//! Ground-truth world generation: a Watts-Strogatz social graph, the hop-based
//! relationship matrix derived from it, and per-worker skills, costs and
//! platform histories.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Watts-Strogatz parameters: `k` is the ring-lattice degree, `beta` the
/// per-edge rewiring probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphParams {
    pub k: usize,
    pub beta: f64,
}

/// Undirected simple graph over workers `0..num_workers`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    num_workers: usize,
    adjacency: Vec<bool>,
    params: Option<GraphParams>,
}

impl SocialGraph {
    /// Builds a graph from an explicit edge list. Self-loops are rejected,
    /// duplicate edges are merged.
    pub fn from_edges(num_workers: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut graph = SocialGraph { num_workers, adjacency: vec![false; num_workers * num_workers], params: None };
        for &(a, b) in edges {
            if a >= num_workers || b >= num_workers {
                return Err(Error::param(format!("edge ({a},{b}) out of range for {num_workers} workers")));
            }
            if a == b {
                return Err(Error::param(format!("self-loop at worker {a}")));
            }
            graph.set(a, b, true);
        }
        Ok(graph)
    }

    pub fn num_workers(&self) -> usize {
        self.num_workers
    }

    pub fn params(&self) -> Option<GraphParams> {
        self.params
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a * self.num_workers + b]
    }

    fn set(&mut self, a: usize, b: usize, value: bool) {
        let n = self.num_workers;
        self.adjacency[a * n + b] = value;
        self.adjacency[b * n + a] = value;
    }

    pub fn degree(&self, a: usize) -> usize {
        let n = self.num_workers;
        self.adjacency[a * n..(a + 1) * n].iter().filter(|&&e| e).count()
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.num_workers;
        (0..n).filter(move |&b| self.adjacency[a * n + b])
    }

    /// Edges as `(j, j')` with `j < j'`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.num_workers;
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if self.has_edge(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&e| e).count() / 2
    }

    /// `|E| / (J(J-1)/2)`; a graph with fewer than two workers has density 1.
    pub fn edge_density(&self) -> f64 {
        let n = self.num_workers;
        if n < 2 {
            return 1.0;
        }
        self.edge_count() as f64 / (n * (n - 1) / 2) as f64
    }

    /// BFS edge counts from `source`; `None` for unreachable workers.
    pub fn path_lengths_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_workers];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or_default();
            for v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Generates a Watts-Strogatz small-world graph.
///
/// Starts from the ring lattice where each worker links to its `k/2` nearest
/// neighbours on each side, then visits the clockwise lattice edges `(u, u+d)`
/// for `d = 1..=k/2` and, with probability `beta`, moves the far endpoint to a
/// uniformly drawn worker that is neither `u` nor already adjacent to `u`.
/// Rewiring never changes the edge count `J*k/2`.
///
/// `k == J - 1` is accepted for any parity and yields the complete graph.
pub fn generate_graph(num_workers: usize, k: usize, beta: f64, seed: u64) -> Result<SocialGraph> {
    let n = num_workers;
    if n == 0 {
        return Err(Error::param("graph needs at least one worker"));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param(format!("rewiring probability beta={beta} outside [0,1]")));
    }
    let params = Some(GraphParams { k, beta });
    if k + 1 == n {
        let mut graph = SocialGraph { num_workers: n, adjacency: vec![false; n * n], params };
        for a in 0..n {
            for b in a + 1..n {
                graph.set(a, b, true);
            }
        }
        return Ok(graph);
    }
    if n < 3 {
        return Err(Error::param(format!("graph with K < J-1 needs J >= 3, got J={n}")));
    }
    if !k.is_multiple_of(2) || k >= n {
        return Err(Error::param(format!("K={k} must be even and below J={n} (or equal J-1)")));
    }

    let mut graph = SocialGraph { num_workers: n, adjacency: vec![false; n * n], params };
    let half = k / 2;
    for u in 0..n {
        for d in 1..=half {
            graph.set(u, (u + d) % n, true);
        }
    }

    let mut rng = rng::stream(seed, &[rng::GRAPH]);
    for d in 1..=half {
        for u in 0..n {
            if !rng.random_bool(beta) {
                continue;
            }
            if graph.degree(u) >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !graph.has_edge(u, w) {
                    break w;
                }
            };
            graph.set(u, (u + d) % n, false);
            graph.set(u, w, true);
        }
    }
    Ok(graph)
}

/// Symmetric `J x J` social relationship levels in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationshipMatrix {
    values: Matrix,
}

impl RelationshipMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[(a, b)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }
}

/// `R = 1 / (1 + n_hops)` where `n_hops` counts the intermediate workers on a
/// shortest path, so direct neighbours get 1, a path of length `L` gets `1/L`,
/// and pairs in different components get 0. The diagonal is 1.
pub fn relationship_matrix(graph: &SocialGraph) -> RelationshipMatrix {
    let n = graph.num_workers();
    let mut values = Matrix::filled(n, n, 0.0);
    for a in 0..n {
        for (b, len) in graph.path_lengths_from(a).into_iter().enumerate() {
            values[(a, b)] = match len {
                Some(0) => 1.0,
                Some(l) => 1.0 / l as f64,
                None => 0.0,
            };
        }
    }
    RelationshipMatrix { values }
}

/// Distribution of one worker attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttributeDist {
    Uniform { low: f64, high: f64 },
    Constant { value: f64 },
}

impl AttributeDist {
    pub const UNIT: AttributeDist = AttributeDist::Uniform { low: 0.0, high: 1.0 };

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            AttributeDist::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            AttributeDist::Constant { value } => value,
        }
    }

    fn support(&self) -> (f64, f64) {
        match *self {
            AttributeDist::Uniform { low, high } => (low, high),
            AttributeDist::Constant { value } => (value, value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeDists {
    pub skills: AttributeDist,
    pub costs: AttributeDist,
    pub histories: AttributeDist,
}

impl Default for AttributeDists {
    fn default() -> Self {
        AttributeDists { skills: AttributeDist::UNIT, costs: AttributeDist::UNIT, histories: AttributeDist::UNIT }
    }
}

impl AttributeDists {
    fn validate(&self) -> Result<()> {
        let check = |name: &str, dist: &AttributeDist, lo: f64, hi: f64| {
            let (a, b) = dist.support();
            if !(a.is_finite() && b.is_finite()) || a > b || a < lo || b > hi {
                return Err(Error::param(format!("{name} distribution support [{a},{b}] not within [{lo},{hi}]")));
            }
            Ok(())
        };
        check("skills", &self.skills, 0.0, 1.0)?;
        check("costs", &self.costs, 0.0, f64::INFINITY)?;
        check("histories", &self.histories, 0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub workers: usize,
    pub skills: usize,
    pub graph: GraphParams,
    pub attributes: AttributeDists,
}

/// The ground truth every recruiter estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "WorldDoc", try_from = "WorldDoc")]
pub struct World {
    pub graph: SocialGraph,
    pub relationships: RelationshipMatrix,
    /// `J x S` true expertise.
    pub skills: Matrix,
    /// `J x S` requested cost per skill.
    pub costs: Matrix,
    pub histories: Vec<f64>,
    pub seed: u64,
}

impl World {
    pub fn num_workers(&self) -> usize {
        self.graph.num_workers()
    }

    pub fn num_skills(&self) -> usize {
        self.skills.cols()
    }

    /// Assembles a world from explicit parts, checking shapes and ranges.
    pub fn from_parts(graph: SocialGraph, skills: Matrix, costs: Matrix, histories: Vec<f64>, seed: u64) -> Result<World> {
        let n = graph.num_workers();
        if skills.rows() != n || costs.rows() != n || histories.len() != n || costs.cols() != skills.cols() {
            return Err(Error::param("world attribute shapes disagree with the worker count"));
        }
        if skills.cols() == 0 {
            return Err(Error::param("world needs at least one skill"));
        }
        if skills.values().iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::param("skill levels must lie in [0,1]"));
        }
        if costs.values().iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::param("costs must be finite and nonnegative"));
        }
        if histories.iter().any(|h| !(0.0..=1.0).contains(h)) {
            return Err(Error::param("histories must lie in [0,1]"));
        }
        let relationships = relationship_matrix(&graph);
        Ok(World { graph, relationships, skills, costs, histories, seed })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Hex SHA-256 of the canonical JSON document.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("world serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Generates a world. Attributes are drawn in row-major order from streams
/// keyed by `seed` alone; the graph stream is keyed by `(seed, K)`, so worlds
/// that differ only in `K` share every skill, cost and history.
pub fn generate_world(config: &WorldConfig, seed: u64) -> Result<World> {
    if config.workers == 0 || config.skills == 0 {
        return Err(Error::param("world needs J >= 1 and S >= 1"));
    }
    config.attributes.validate()?;
    let graph_seed = rng::derive(seed, &[rng::GRAPH, config.graph.k as u64]);
    let graph = generate_graph(config.workers, config.graph.k, config.graph.beta, graph_seed)?;

    let (n, s) = (config.workers, config.skills);
    let mut skill_rng = rng::stream(seed, &[rng::SKILLS]);
    let skills = Matrix::from_fn(n, s, |_, _| config.attributes.skills.sample(&mut skill_rng));
    let mut cost_rng = rng::stream(seed, &[rng::COSTS]);
    let costs = Matrix::from_fn(n, s, |_, _| config.attributes.costs.sample(&mut cost_rng));
    let mut history_rng = rng::stream(seed, &[rng::HISTORIES]);
    let histories = (0..n).map(|_| config.attributes.histories.sample(&mut history_rng)).collect();

    World::from_parts(graph, skills, costs, histories, seed)
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    #[serde(rename = "K")]
    k: Option<usize>,
    beta: Option<f64>,
    edges: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
struct WorldDoc {
    #[serde(rename = "J")]
    j: usize,
    #[serde(rename = "S")]
    s: usize,
    seed: u64,
    graph: GraphDoc,
    skills: Matrix,
    costs: Matrix,
    histories: Vec<f64>,
}

impl From<World> for WorldDoc {
    fn from(world: World) -> Self {
        let params = world.graph.params();
        WorldDoc {
            j: world.num_workers(),
            s: world.num_skills(),
            seed: world.seed,
            graph: GraphDoc {
                k: params.map(|p| p.k),
                beta: params.map(|p| p.beta),
                edges: world.graph.edges().into_iter().map(|(a, b)| [a, b]).collect(),
            },
            skills: world.skills,
            costs: world.costs,
            histories: world.histories,
        }
    }
}

impl TryFrom<WorldDoc> for World {
    type Error = Error;

    fn try_from(doc: WorldDoc) -> Result<World> {
        let edges: Vec<(usize, usize)> = doc.graph.edges.iter().map(|e| (e[0], e[1])).collect();
        let mut graph = SocialGraph::from_edges(doc.j, &edges)?;
        if let (Some(k), Some(beta)) = (doc.graph.k, doc.graph.beta) {
            graph.params = Some(GraphParams { k, beta });
        }
        if doc.skills.cols() != doc.s && doc.j > 0 {
            return Err(Error::param("skills matrix width disagrees with S"));
        }
        World::from_parts(graph, doc.skills, doc.costs, doc.histories, doc.seed)
    }
}
