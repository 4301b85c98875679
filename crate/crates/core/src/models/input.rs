//! Graph-derived constants shared by every forward pass.

use std::sync::Arc;

use crate::graph::BugBugGraph;
use crate::numerics::{SparseMatrix, SparsePattern};
use crate::scalar::Scalar;

/// Precomputed structure of a bug-bug graph in node-index order.
#[derive(Debug, Clone)]
pub struct GraphInput<T: Scalar> {
    n: usize,
    /// D̃^(-1/2) (A + I) D̃^(-1/2)
    pub a_hat: Arc<SparseMatrix<T>>,
    /// N(i) ∪ {i} for every node, columns sorted.
    pub attention: Arc<SparsePattern>,
    /// Row (target) node of every attention entry.
    pub attention_rows: Arc<Vec<usize>>,
    /// Column (source) node of every attention entry.
    pub attention_cols: Arc<Vec<usize>>,
    /// Sorted neighbor lists without self-loops.
    pub neighbors: Arc<Vec<Vec<usize>>>,
}

impl<T: Scalar> GraphInput<T> {
    pub fn new(g: &BugBugGraph) -> Self {
        let n = g.node_count();
        let with_self: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut row = g.neighbors(i).to_vec();
                row.push(i);
                row.sort_unstable();
                row
            })
            .collect();
        let pattern = Arc::new(SparsePattern::from_rows(n, with_self).expect("indices in range"));
        let inv_sqrt: Vec<T> = (0..n)
            .map(|i| T::one() / T::from_count(g.degree(i) + 1).sqrt())
            .collect();
        let rows = pattern.entry_rows();
        let values = rows
            .iter()
            .zip(pattern.col_idx())
            .map(|(&r, &c)| inv_sqrt[r] * inv_sqrt[c])
            .collect();
        let a_hat = SparseMatrix::new(Arc::clone(&pattern), values).expect("values match pattern");
        Self {
            n,
            a_hat: Arc::new(a_hat),
            attention_cols: Arc::new(pattern.col_idx().to_vec()),
            attention_rows: Arc::new(rows),
            attention: pattern,
            neighbors: Arc::new((0..n).map(|i| g.neighbors(i).to_vec()).collect()),
        }
    }

    /// Graph without edges, for models that ignore structure.
    pub fn edgeless(n: usize) -> Self {
        Self::new(&BugBugGraph::from_edges((1..=n as u64).collect(), []).expect("valid"))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }
}
