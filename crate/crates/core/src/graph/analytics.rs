//! Node centralities, PageRank, and rank correlation against bug heat.

use serde::Serialize;

use super::{BugBugGraph, GraphError};
use crate::scalar::Scalar;

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const PAGERANK_MAX_ITERATIONS: usize = 10_000;

/// degree(v) / (n - 1).
pub fn degree_centrality<T: Scalar>(g: &BugBugGraph) -> Result<Vec<T>, GraphError> {
    let n = g.node_count();
    if n < 2 {
        return Err(GraphError::SingletonGraph);
    }
    let denom = T::from_count(n - 1);
    Ok((0..n).map(|v| T::from_count(g.degree(v)) / denom).collect())
}

/// Local clustering coefficient; 0 for nodes of degree below 2.
pub fn clustering_coefficient<T: Scalar>(g: &BugBugGraph) -> Vec<T> {
    (0..g.node_count())
        .map(|v| {
            let nbrs = g.neighbors(v);
            let k = nbrs.len();
            if k < 2 {
                return T::zero();
            }
            let mut triangles = 0usize;
            for (i, &a) in nbrs.iter().enumerate() {
                let a_nbrs = g.neighbors(a);
                // count b > a among v's neighbors adjacent to a, via a sorted merge
                let rest = &nbrs[i + 1..];
                let (mut x, mut y) = (0, 0);
                while x < rest.len() && y < a_nbrs.len() {
                    match rest[x].cmp(&a_nbrs[y]) {
                        std::cmp::Ordering::Less => x += 1,
                        std::cmp::Ordering::Greater => y += 1,
                        std::cmp::Ordering::Equal => {
                            triangles += 1;
                            x += 1;
                            y += 1;
                        }
                    }
                }
            }
            T::from_count(2 * triangles) / T::from_count(k * (k - 1))
        })
        .collect()
}

/// Damped random-walk stationary distribution. Isolated nodes spread their mass uniformly.
///
/// Iterates until the L1 change falls below `tol`.
pub fn pagerank<T: Scalar>(g: &BugBugGraph, damping: T, tol: T) -> Result<Vec<T>, GraphError> {
    let n = g.node_count();
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }
    let nf = T::from_count(n);
    let teleport = (T::one() - damping) / nf;
    let mut rank = vec![T::one() / nf; n];
    let mut next = vec![T::zero(); n];
    for _ in 0..PAGERANK_MAX_ITERATIONS {
        let dangling: T = (0..n)
            .filter(|&v| g.degree(v) == 0)
            .map(|v| rank[v])
            .sum();
        let base = teleport + damping * dangling / nf;
        for v in 0..n {
            let inflow: T = g
                .neighbors(v)
                .iter()
                .map(|&u| rank[u] / T::from_count(g.degree(u)))
                .sum();
            next[v] = base + damping * inflow;
        }
        let total: T = next.iter().copied().sum();
        for x in &mut next {
            *x /= total;
        }
        let change: T = rank.iter().zip(&next).map(|(&a, &b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if change < tol {
            return Ok(rank);
        }
    }
    Err(GraphError::NonConvergence(PAGERANK_MAX_ITERATIONS))
}

/// 1-based ranks in ascending order of value, ties sharing the mean of their positions.
pub fn average_ranks<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("comparable values"));
    let mut ranks = vec![T::zero(); values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank mean((i+1)..=(j+1))
        let shared = T::from_count(i + j + 2) / T::lit(2.0);
        for &k in &order[i..=j] {
            ranks[k] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson<T: Scalar>(a: &[T], b: &[T]) -> Result<T, GraphError> {
    let n = T::from_count(a.len());
    let ma = a.iter().copied().sum::<T>() / n;
    let mb = b.iter().copied().sum::<T>() / n;
    let (mut cov, mut va, mut vb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == T::zero() || vb == T::zero() {
        return Err(GraphError::DegenerateInput);
    }
    let rho = cov / (va.sqrt() * vb.sqrt());
    Ok(rho.max(-T::one()).min(T::one()))
}

/// Spearman's ρ with average ranks for ties.
pub fn spearman<T: Scalar>(a: &[T], b: &[T]) -> Result<T, GraphError> {
    if a.len() != b.len() {
        return Err(GraphError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(GraphError::TooShort(a.len()));
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Per-node centralities of a bug-bug graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralityReport<T> {
    pub degree_centrality: Vec<T>,
    pub clustering_coefficient: Vec<T>,
    pub pagerank: Vec<T>,
}

impl<T: Scalar> CentralityReport<T> {
    pub fn compute(g: &BugBugGraph) -> Result<Self, GraphError> {
        Ok(Self {
            degree_centrality: degree_centrality(g)?,
            clustering_coefficient: clustering_coefficient(g),
            pagerank: pagerank(g, T::lit(DEFAULT_DAMPING), T::lit(DEFAULT_TOLERANCE))?,
        })
    }
}

/// Spearman ρ between heat and each centrality, within the top-k and bottom-k bugs by heat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationReport<T> {
    pub k: usize,
    pub degree_top: T,
    pub degree_bottom: T,
    pub clustering_top: T,
    pub clustering_bottom: T,
    pub pagerank_top: T,
    pub pagerank_bottom: T,
}

/// Correlates heat with degree, clustering and PageRank on the k hottest and k coldest bugs.
///
/// Bugs are ordered by descending heat, ties by node index.
pub fn centrality_heat_correlation<T: Scalar>(
    g: &BugBugGraph,
    heat: &[u64],
    k: usize,
) -> Result<CorrelationReport<T>, GraphError> {
    let n = g.node_count();
    if heat.len() != n {
        return Err(GraphError::LengthMismatch(heat.len(), n));
    }
    if k > n / 2 {
        return Err(GraphError::InvalidK { k, n });
    }
    let centrality = CentralityReport::<T>::compute(g)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| heat[b].cmp(&heat[a]).then(a.cmp(&b)));
    let top = &order[..k];
    let bottom = &order[n - k..];

    let rho = |subset: &[usize], measure: &[T]| -> Result<T, GraphError> {
        let h: Vec<T> = subset.iter().map(|&v| T::lit(heat[v] as f64)).collect();
        let m: Vec<T> = subset.iter().map(|&v| measure[v]).collect();
        spearman(&h, &m)
    };
    Ok(CorrelationReport {
        k,
        degree_top: rho(top, &centrality.degree_centrality)?,
        degree_bottom: rho(bottom, &centrality.degree_centrality)?,
        clustering_top: rho(top, &centrality.clustering_coefficient)?,
        clustering_bottom: rho(bottom, &centrality.clustering_coefficient)?,
        pagerank_top: rho(top, &centrality.pagerank)?,
        pagerank_bottom: rho(bottom, &centrality.pagerank)?,
    })
}
