//! Per-bug comparison of two models and the anchor neighborhoods used to inspect them.

use std::fmt::Write as _;

use serde::Serialize;

use super::data::{NodeMask, TargetVector};
use super::ExperimentError;
use crate::graph::BugBugGraph;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRow {
    pub bug_id: u64,
    pub true_value: f64,
    pub pred_b: f64,
    pub pred_a: f64,
    pub delta_b: f64,
    pub delta_a: f64,
    pub train_neighbors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorAnalysis {
    pub n_test: usize,
    /// Test nodes where model a is strictly closer to the truth.
    pub a_better: usize,
    pub a_better_pct: f64,
    /// Of those, nodes with at least one train-mask neighbor.
    pub a_better_with_train_neighbor: usize,
    /// Every test node, sorted by Δb − Δa descending, ties by bug id.
    pub cases: Vec<CaseRow>,
}

/// Train-mask neighbor count of every node.
pub fn train_neighbor_counts(graph: &BugBugGraph, targets: &TargetVector) -> Vec<usize> {
    (0..graph.node_count())
        .map(|v| {
            graph
                .neighbors(v)
                .iter()
                .filter(|&&u| targets.mask[u] == NodeMask::Train)
                .count()
        })
        .collect()
}

/// Compares per-node absolute errors of models a and b over the test mask.
pub fn error_analysis(
    pred_a: &[f64],
    pred_b: &[f64],
    targets: &TargetVector,
    graph: &BugBugGraph,
) -> Result<ErrorAnalysis, ExperimentError> {
    let n = graph.node_count();
    if targets.node_ids != graph.node_ids() {
        return Err(ExperimentError::MaskMismatch("targets and graph disagree on node order".into()));
    }
    if pred_a.len() != n || pred_b.len() != n {
        return Err(ExperimentError::MaskMismatch(format!(
            "prediction lengths {} and {} for {n} nodes",
            pred_a.len(),
            pred_b.len()
        )));
    }
    let neighbors = train_neighbor_counts(graph, targets);
    let mut cases: Vec<CaseRow> = targets
        .indices(NodeMask::Test)
        .into_iter()
        .map(|v| {
            let t = targets.values[v];
            CaseRow {
                bug_id: targets.node_ids[v],
                true_value: t,
                pred_b: pred_b[v],
                pred_a: pred_a[v],
                delta_b: (pred_b[v] - t).abs(),
                delta_a: (pred_a[v] - t).abs(),
                train_neighbors: neighbors[v],
            }
        })
        .collect();
    cases.sort_by(|x, y| {
        let gx = x.delta_b - x.delta_a;
        let gy = y.delta_b - y.delta_a;
        gy.total_cmp(&gx).then(x.bug_id.cmp(&y.bug_id))
    });
    let better: Vec<&CaseRow> = cases.iter().filter(|c| c.delta_a < c.delta_b).collect();
    let n_test = cases.len();
    Ok(ErrorAnalysis {
        n_test,
        a_better: better.len(),
        a_better_pct: if n_test == 0 { 0.0 } else { 100.0 * better.len() as f64 / n_test as f64 },
        a_better_with_train_neighbor: better.iter().filter(|c| c.train_neighbors > 0).count(),
        cases,
    })
}

impl ErrorAnalysis {
    pub const CSV_HEADER: &'static str = "bug_id,true_rank,pred_b,pred_a,delta_b,delta_a,train_neighbors";

    pub fn case_row_csv(c: &CaseRow) -> String {
        format!(
            "{},{:.3},{:.3},{:.3},{:.3},{:.3},{}",
            c.bug_id, c.true_value, c.pred_b, c.pred_a, c.delta_b, c.delta_a, c.train_neighbors
        )
    }

    pub fn cases_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.cases {
            let _ = writeln!(out, "{}", Self::case_row_csv(c));
        }
        out
    }
}

/// The anchor, its train-mask neighbors, and every edge among them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnchorNeighborhood {
    pub anchor: usize,
    /// Anchor first, then neighbors ascending.
    pub nodes: Vec<usize>,
    /// Original node indices, (i, j) with i < j, ascending.
    pub edges: Vec<(usize, usize)>,
    /// Degree of each entry of `nodes` within the subgraph.
    pub degrees: Vec<usize>,
}

pub fn anchor_neighborhood(graph: &BugBugGraph, anchor: usize, targets: &TargetVector) -> AnchorNeighborhood {
    let mut nodes = vec![anchor];
    nodes.extend(
        graph
            .neighbors(anchor)
            .iter()
            .copied()
            .filter(|&u| targets.mask[u] == NodeMask::Train),
    );
    let mut sorted = nodes.clone();
    sorted.sort_unstable();
    let mut edges = Vec::new();
    for (k, &a) in sorted.iter().enumerate() {
        for &b in &sorted[k + 1..] {
            if graph.has_edge(a, b) {
                edges.push((a, b));
            }
        }
    }
    let degrees = nodes
        .iter()
        .map(|&v| edges.iter().filter(|&&(a, b)| a == v || b == v).count())
        .collect();
    AnchorNeighborhood {
        anchor,
        nodes,
        edges,
        degrees,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn targets(mask: Vec<NodeMask>, values: Vec<f64>) -> TargetVector {
        TargetVector {
            node_ids: (1..=mask.len() as u64).collect(),
            values,
            mask,
        }
    }

    #[test]
    fn table_row_formatting() {
        let row = CaseRow {
            bug_id: 1792783,
            true_value: 7.920,
            pred_b: 5.804,
            pred_a: 8.048,
            delta_b: (5.804f64 - 7.920).abs(),
            delta_a: (8.048f64 - 7.920).abs(),
            train_neighbors: 28,
        };
        assert_eq!(
            ErrorAnalysis::case_row_csv(&row),
            "1792783,7.920,5.804,8.048,2.116,0.128,28"
        );
    }

    #[test]
    fn exact_model_a_wins_where_b_errs() {
        use NodeMask::*;
        let g = BugBugGraph::from_edges(vec![1, 2, 3, 4], [(0, 1), (1, 2), (2, 3)]).unwrap();
        let t = targets(vec![Train, Test, Test, Test], vec![1.0, 2.0, 3.0, 4.0]);
        let a = t.values.clone();
        let b = vec![0.0, 2.5, 3.0, 1.0];
        let r = error_analysis(&a, &b, &t, &g).unwrap();
        assert_eq!(r.a_better, 2);
        assert_eq!(r.a_better_with_train_neighbor, 1);
        assert_eq!(r.cases[0].bug_id, 4);
        assert_eq!(r.cases[0].train_neighbors, 0);
    }

    #[test]
    fn anchor_cases() {
        use NodeMask::*;
        let g = BugBugGraph::from_edges(vec![1, 2, 3, 4], [(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        let t = targets(vec![Test, Train, Train, Val], vec![0.0; 4]);
        let nb = anchor_neighborhood(&g, 0, &t);
        assert_eq!(nb.nodes, vec![0, 1, 2]);
        assert_eq!(nb.edges.len(), 3);
        assert_eq!(nb.degrees, vec![2, 2, 2]);
        let lone = anchor_neighborhood(&g, 3, &targets(vec![Train, Train, Test, Test], vec![0.0; 4]));
        assert_eq!((lone.nodes, lone.edges.len()), (vec![3], 0));
    }

    #[test]
    fn length_mismatch_rejected() {
        let g = BugBugGraph::from_edges(vec![1, 2], [(0, 1)]).unwrap();
        let t = targets(vec![NodeMask::Test; 2], vec![1.0, 2.0]);
        assert!(matches!(
            error_analysis(&[1.0], &[1.0, 2.0], &t, &g),
            Err(ExperimentError::MaskMismatch(_))
        ));
    }
}
