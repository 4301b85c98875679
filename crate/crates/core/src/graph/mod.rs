//! Bug-package bipartite graph, its bug-bug projection, and network analytics.

mod analytics;
mod io;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::corpus::Corpus;

pub use analytics::{
    average_ranks, centrality_heat_correlation, clustering_coefficient, degree_centrality,
    pagerank, spearman, CentralityReport, CorrelationReport, DEFAULT_DAMPING, DEFAULT_TOLERANCE,
    PAGERANK_MAX_ITERATIONS,
};
pub use io::{read_edge_list, write_edge_list, NodeSidecar};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph has fewer than 2 nodes")]
    SingletonGraph,
    #[error("graph is empty")]
    EmptyGraph,
    #[error("PageRank did not converge after {0} iterations")]
    NonConvergence(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 values, got {0}")]
    TooShort(usize),
    #[error("degenerate input: constant sequence")]
    DegenerateInput,
    #[error("k = {k} exceeds half of n = {n}")]
    InvalidK { k: usize, n: usize },
    #[error("edge ({0}, {1}) is out of range or a self-loop")]
    InvalidEdge(usize, usize),
    #[error("node ids must be strictly ascending")]
    UnsortedIds,
    #[error("unknown bug id {0}")]
    UnknownNode(u64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Bugs on one side, packages on the other; one edge per (bug, package) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    pub bug_ids: Vec<u64>,
    pub package_ids: Vec<String>,
    /// (bug index, package index) → earliest affection time.
    pub edges: BTreeMap<(usize, usize), DateTime<Utc>>,
}

impl BipartiteGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Bug indices per package index.
    pub fn bugs_by_package(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.package_ids.len()];
        for &(b, p) in self.edges.keys() {
            out[p].push(b);
        }
        out
    }
}

/// Bipartite graph over every bug in the corpus, keeping package links affected no later than `cutoff`.
///
/// Bugs are ordered by ascending id and packages by name. Bugs without a qualifying package stay
/// as isolated nodes.
pub fn build_bipartite(corpus: &Corpus, cutoff: DateTime<Utc>) -> BipartiteGraph {
    let mut bug_ids: Vec<u64> = corpus.records().iter().map(|r| r.id).collect();
    bug_ids.sort_unstable();
    let bug_pos: HashMap<u64, usize> = bug_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let packages: BTreeSet<&str> = corpus
        .records()
        .iter()
        .flat_map(|r| r.affected.iter())
        .filter(|a| a.ts <= cutoff)
        .map(|a| a.package.as_str())
        .collect();
    let package_ids: Vec<String> = packages.iter().map(|s| s.to_string()).collect();
    let pkg_pos: HashMap<&str, usize> = packages.iter().enumerate().map(|(i, &p)| (p, i)).collect();

    let mut edges: BTreeMap<(usize, usize), DateTime<Utc>> = BTreeMap::new();
    for r in corpus.records() {
        let b = bug_pos[&r.id];
        for a in r.affected.iter().filter(|a| a.ts <= cutoff) {
            let key = (b, pkg_pos[a.package.as_str()]);
            edges
                .entry(key)
                .and_modify(|t| *t = (*t).min(a.ts))
                .or_insert(a.ts);
        }
    }
    BipartiteGraph {
        bug_ids,
        package_ids,
        edges,
    }
}

/// Undirected simple graph over bugs, nodes ordered by ascending bug id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BugBugGraph {
    node_ids: Vec<u64>,
    neighbors: Vec<Vec<usize>>,
    edge_count: usize,
}

impl BugBugGraph {
    /// Builds from index pairs; duplicates and orientation are normalized, self-loops rejected.
    pub fn from_edges(
        node_ids: Vec<u64>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let n = node_ids.len();
        if node_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GraphError::UnsortedIds);
        }
        let mut neighbors = vec![Vec::new(); n];
        for (a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(GraphError::InvalidEdge(a, b));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        let mut edge_count = 0;
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }
        Ok(Self {
            node_ids,
            neighbors,
            edge_count: edge_count / 2,
        })
    }

    /// Edges given as bug id pairs; the node set is `node_ids` (sorted ascending here).
    pub fn from_id_edges(
        mut node_ids: Vec<u64>,
        edges: impl IntoIterator<Item = (u64, u64)>,
    ) -> Result<Self, GraphError> {
        node_ids.sort_unstable();
        node_ids.dedup();
        let pos: HashMap<u64, usize> = node_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut idx = Vec::new();
        for (a, b) in edges {
            let ia = *pos.get(&a).ok_or(GraphError::UnknownNode(a))?;
            let ib = *pos.get(&b).ok_or(GraphError::UnknownNode(b))?;
            idx.push((ia, ib));
        }
        Self::from_edges(node_ids, idx)
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn node_ids(&self) -> &[u64] {
        &self.node_ids
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.node_ids.binary_search(&id).ok()
    }

    /// Sorted neighbor indices.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// Edges as (i, j) with i < j in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Same node labels with structure relabeled: edge (a, b) becomes (perm[a], perm[b]).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GraphError> {
        let n = self.node_count();
        if perm.len() != n {
            return Err(GraphError::LengthMismatch(perm.len(), n));
        }
        let edges = self.edges().into_iter().map(|(a, b)| (perm[a], perm[b]));
        Self::from_edges(self.node_ids.clone(), edges)
    }
}

/// One-mode projection: bugs are adjacent when they share at least one package. Unweighted.
pub fn project(bg: &BipartiteGraph) -> BugBugGraph {
    let n = bg.bug_ids.len();
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for bugs in bg.bugs_by_package() {
        for (k, &a) in bugs.iter().enumerate() {
            for &b in &bugs[k + 1..] {
                neighbors[a].insert(b);
                neighbors[b].insert(a);
            }
        }
    }
    let edge_count = neighbors.iter().map(BTreeSet::len).sum::<usize>() / 2;
    BugBugGraph {
        node_ids: bg.bug_ids.clone(),
        neighbors: neighbors.into_iter().map(|s| s.into_iter().collect()).collect(),
        edge_count,
    }
}
