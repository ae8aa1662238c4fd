//! Undirected network topology of secondary users, its Laplacian, and
//! random link-failure snapshots.
//!
//! A [`Topology`] is the maximal set of communication links; a
//! [`GraphSnapshot`] is the subgraph alive at one iteration after
//! independent link failures ([`sample_snapshot`]).

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("topology must have at least one node")]
    ZeroNodes,
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("node id {id} out of range (node count {node_count})")]
    OutOfRange { id: usize, node_count: usize },
    #[error("link failure probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("topology file, line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Undirected graph over nodes `0..node_count`, stored as a canonical
/// (sorted, deduplicated, `(min, max)`) edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Topology {
    /// Build a topology from an edge list. Edges are canonicalized; invalid
    /// input (`n = 0`, self-loop, out-of-range endpoint) is rejected.
    pub fn new(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if node_count == 0 {
            return Err(GraphError::ZeroNodes);
        }
        let mut canonical: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            for id in [a, b] {
                if id >= node_count {
                    return Err(GraphError::OutOfRange { id, node_count });
                }
            }
            canonical.push((a.min(b), a.max(b)));
        }
        canonical.sort_unstable();
        canonical.dedup();
        let mut adjacency = vec![Vec::new(); node_count];
        for &(i, j) in &canonical {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        Ok(Self {
            node_count,
            edges: canonical,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Canonical edge list, sorted, each edge as `(min, max)`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Maximum degree Δ; 0 for an edgeless graph.
    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// True iff a single connected component covers all nodes (breadth-first
    /// search; a single node counts as connected).
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.node_count
    }

    /// Graph Laplacian: `l_ii = degree(i)`, `l_ij = -1` on edges, 0 elsewhere.
    /// Symmetric positive semi-definite with zero row and column sums.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.node_count;
        let mut l = DMatrix::zeros(n, n);
        for &(i, j) in &self.edges {
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
            l[(i, j)] = -1.0;
            l[(j, i)] = -1.0;
        }
        l
    }

    /// Parse the plain-text topology format: first (non-comment) line
    /// `n <count>`, then `e <i> <j>` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut node_count: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap();
            let parse_id = |tok: Option<&str>| -> Result<usize, GraphError> {
                tok.and_then(|t| t.parse().ok()).ok_or(GraphError::Parse {
                    line: line_no,
                    message: format!("expected a non-negative integer in {line:?}"),
                })
            };
            match tag {
                "n" => {
                    if node_count.is_some() {
                        return Err(GraphError::Parse {
                            line: line_no,
                            message: "duplicate `n` line".into(),
                        });
                    }
                    node_count = Some(parse_id(parts.next())?);
                }
                "e" => {
                    if node_count.is_none() {
                        return Err(GraphError::Parse {
                            line: line_no,
                            message: "`e` line before `n` line".into(),
                        });
                    }
                    edges.push((parse_id(parts.next())?, parse_id(parts.next())?));
                }
                other => {
                    return Err(GraphError::Parse {
                        line: line_no,
                        message: format!("unknown tag {other:?}"),
                    });
                }
            }
            if parts.next().is_some() {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: format!("trailing tokens in {line:?}"),
                });
            }
        }
        let node_count = node_count.ok_or(GraphError::Parse {
            line: 0,
            message: "missing `n <count>` line".into(),
        })?;
        Self::new(node_count, edges)
    }

    /// Canonical serialization; `Topology::parse(t.to_text())` round-trips
    /// exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.node_count);
        for &(i, j) in &self.edges {
            out.push_str(&format!("e {i} {j}\n"));
        }
        out
    }
}

/// Independent per-edge failure probability `p ∈ [0, 1]`; the degenerate
/// endpoints 0 and 1 are admitted for tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkFailureModel {
    failure_probability: f64,
}

impl LinkFailureModel {
    pub fn new(failure_probability: f64) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&failure_probability) {
            return Err(GraphError::BadProbability(failure_probability));
        }
        Ok(Self {
            failure_probability,
        })
    }

    pub fn failure_probability(&self) -> f64 {
        self.failure_probability
    }
}

/// One realization of the random graph: the subset of base edges alive at a
/// given iteration. Holds a mask parallel to `base.edges()`, so an edge
/// absent from the base topology can never appear active.
#[derive(Debug, Clone)]
pub struct GraphSnapshot<'a> {
    base: &'a Topology,
    active: Vec<bool>,
}

impl<'a> GraphSnapshot<'a> {
    pub fn base(&self) -> &Topology {
        self.base
    }

    /// Full-base snapshot (every edge alive).
    pub fn full(base: &'a Topology) -> Self {
        Self {
            base,
            active: vec![true; base.edges().len()],
        }
    }

    pub fn active_edge_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn active_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.base
            .edges()
            .iter()
            .zip(&self.active)
            .filter_map(|(&e, &alive)| alive.then_some(e))
    }
}

/// Random connected topology for simulation studies: a uniformly permuted
/// spanning tree plus independent extra edges with the given probability.
pub fn random_connected_topology(
    n: usize,
    extra_edge_probability: f64,
    rng: &mut impl Rng,
) -> Topology {
    assert!(n >= 1);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        edges.push((order[i], parent));
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random::<f64>() < extra_edge_probability {
                edges.push((a, b));
            }
        }
    }
    Topology::new(n, edges).expect("generated edges are valid")
}

/// Sample one snapshot: each base edge is retained independently with
/// probability `1 - p`. A failed link is down in both directions.
pub fn sample_snapshot<'a>(
    base: &'a Topology,
    model: &LinkFailureModel,
    rng: &mut impl Rng,
) -> GraphSnapshot<'a> {
    let keep = 1.0 - model.failure_probability();
    let active = base
        .edges()
        .iter()
        .map(|_| rng.random::<f64>() < keep)
        .collect();
    GraphSnapshot { base, active }
}
