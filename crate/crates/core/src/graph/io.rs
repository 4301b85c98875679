//! Edge-list export: `bug_id<TAB>bug_id\n` per edge plus a JSON node-order sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BugBugGraph, GraphError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSidecar {
    pub node_ids: Vec<u64>,
    pub edge_count: usize,
}

impl NodeSidecar {
    /// `<edge list path>.nodes.json`
    pub fn path_for(edge_list: &Path) -> PathBuf {
        let mut s = edge_list.as_os_str().to_owned();
        s.push(".nodes.json");
        PathBuf::from(s)
    }
}

/// Writes the edge list (edges in ascending index order, smaller id first) and its sidecar.
pub fn write_edge_list(g: &BugBugGraph, path: &Path) -> Result<PathBuf, GraphError> {
    let ids = g.node_ids();
    let mut buf = Vec::with_capacity(g.edge_count() * 16);
    for (a, b) in g.edges() {
        writeln!(buf, "{}\t{}", ids[a], ids[b])?;
    }
    fs::write(path, buf)?;
    let sidecar = NodeSidecar {
        node_ids: ids.to_vec(),
        edge_count: g.edge_count(),
    };
    let side_path = NodeSidecar::path_for(path);
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| GraphError::Parse(e.to_string()))?;
    fs::write(&side_path, json + "\n")?;
    Ok(side_path)
}

/// Reads an edge list; node set comes from the sidecar when present, otherwise from the edges.
pub fn read_edge_list(path: &Path) -> Result<BugBugGraph, GraphError> {
    let text = fs::read_to_string(path)?;
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let mut next = || -> Result<u64, GraphError> {
            parts
                .next()
                .and_then(|p| p.trim().parse().ok())
                .ok_or_else(|| GraphError::Parse(format!("line {}: expected two bug ids", i + 1)))
        };
        let (a, b) = (next()?, next()?);
        edges.push((a, b));
    }
    let side_path = NodeSidecar::path_for(path);
    let node_ids = if side_path.exists() {
        let sidecar: NodeSidecar = serde_json::from_str(&fs::read_to_string(&side_path)?)
            .map_err(|e| GraphError::Parse(format!("{}: {e}", side_path.display())))?;
        sidecar.node_ids
    } else {
        let mut ids: Vec<u64> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    };
    BugBugGraph::from_id_edges(node_ids, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_isolated_nodes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tsv");
        let g = BugBugGraph::from_edges(vec![3, 8, 11, 40], [(0, 2), (1, 2)]).unwrap();
        write_edge_list(&g, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "3\t11\n8\t11\n");
        assert_eq!(read_edge_list(&path).unwrap(), g);
    }
}
