//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use bugrank::corpus::{AffectedPackage, BugRecord, Comment, Corpus, HeatAttributes, HeatSnapshot};
use bugrank::graph::{BipartiteGraph, BugBugGraph};
use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn ts(y: i32, m: u32, d: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(y, m, d, 0, 0, 0).single().unwrap()
}

pub fn record(id: u64, created: DateTime<Utc>, packages: &[&str]) -> BugRecord {
    BugRecord {
        id,
        reported_on: packages.first().unwrap_or(&"unknown").to_string(),
        created_at: created,
        description: format!("bug {id} description"),
        comments: vec![Comment {
            ts: created,
            text: format!("first comment on {id}"),
        }],
        affected: packages
            .iter()
            .map(|p| AffectedPackage {
                ts: created,
                package: p.to_string(),
            })
            .collect(),
        heat_snapshots: vec![HeatSnapshot {
            crawl_date: NaiveDate::from_ymd_opt(2020, 11, 30).unwrap(),
            heat: id % 97,
        }],
        attrs: None,
    }
}

/// The five bugs and three packages of the published bipartite example.
pub fn fig4_corpus() -> Corpus {
    let t = ts(2017, 3, 1);
    let records = vec![
        record(45702, t, &["mono"]),
        record(64371, t, &["banshee", "mono"]),
        record(1022921, t, &["banshee"]),
        record(1566870, t, &["banshee", "rhythmbox"]),
        record(1298939, t, &["rhythmbox"]),
    ];
    Corpus::new(records, "fig4").unwrap()
}

pub const FIG6_EDGES: [(u64, u64); 5] = [
    (45702, 64371),
    (64371, 1022921),
    (64371, 1566870),
    (1022921, 1566870),
    (1298939, 1566870),
];

pub fn heat_literal(a: &HeatAttributes) -> u64 {
    let mut total = 0;
    if a.is_private {
        total += 150;
    }
    if a.is_security {
        total += 250;
    }
    for _ in 0..a.duplicate_count {
        total += 6;
    }
    for _ in 0..a.affected_users {
        total += 4;
    }
    for _ in 0..a.subscriber_count {
        total += 2;
    }
    total
}

/// All bug pairs sharing a package, as bug id pairs (low, high).
pub fn brute_projection(bg: &BipartiteGraph) -> BTreeSet<(u64, u64)> {
    let mut out = BTreeSet::new();
    let n = bg.bug_ids.len();
    for i in 0..n {
        for j in 0..n {
            if i >= j {
                continue;
            }
            for p in 0..bg.package_ids.len() {
                if bg.edges.contains_key(&(i, p)) && bg.edges.contains_key(&(j, p)) {
                    let (a, b) = (bg.bug_ids[i], bg.bug_ids[j]);
                    out.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    out
}

pub fn id_edges(g: &BugBugGraph) -> BTreeSet<(u64, u64)> {
    g.edges()
        .into_iter()
        .map(|(a, b)| {
            let (x, y) = (g.node_ids()[a], g.node_ids()[b]);
            (x.min(y), x.max(y))
        })
        .collect()
}

pub fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> BugBugGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    BugBugGraph::from_edges((1..=n as u64).collect(), edges).unwrap()
}

pub fn dense_adjacency(g: &BugBugGraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for (i, j) in g.edges() {
        a[i][j] = 1.0;
        a[j][i] = 1.0;
    }
    a
}

/// Power iteration on the dense Google matrix.
pub fn dense_pagerank(g: &BugBugGraph, d: f64) -> Vec<f64> {
    let n = g.node_count();
    let a = dense_adjacency(g);
    let mut m = vec![vec![0.0; n]; n];
    for j in 0..n {
        let out: f64 = a[j].iter().sum();
        for i in 0..n {
            m[i][j] = if out == 0.0 { 1.0 / n as f64 } else { a[j][i] / out };
        }
    }
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..n)
            .map(|i| (1.0 - d) / n as f64 + d * (0..n).map(|j| m[i][j] * r[j]).sum::<f64>())
            .collect();
        let delta: f64 = next.iter().zip(&r).map(|(x, y)| (x - y).abs()).sum();
        r = next;
        if delta < 1e-14 {
            break;
        }
    }
    r
}

/// Local clustering by enumerating every vertex triple.
pub fn triple_clustering(g: &BugBugGraph) -> Vec<f64> {
    let n = g.node_count();
    let mut tri = vec![0usize; n];
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if g.has_edge(a, b) && g.has_edge(b, c) && g.has_edge(a, c) {
                    tri[a] += 1;
                    tri[b] += 1;
                    tri[c] += 1;
                }
            }
        }
    }
    (0..n)
        .map(|v| {
            let k = g.degree(v);
            if k < 2 {
                0.0
            } else {
                2.0 * tri[v] as f64 / (k * (k - 1)) as f64
            }
        })
        .collect()
}

/// Average ranks by counting smaller and equal values.
pub fn naive_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va.sqrt() * vb.sqrt())
}

pub fn spearman_definition(a: &[f64], b: &[f64]) -> f64 {
    pearson(&naive_ranks(a), &naive_ranks(b))
}

/// D̃^(-1/2)(A+I)D̃^(-1/2) built entry by entry.
pub fn dense_a_hat(g: &BugBugGraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = dense_adjacency(g);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = a[i][j] / (deg[i].sqrt() * deg[j].sqrt());
        }
    }
    out
}

pub fn matvec_rows(m: &[Vec<f64>], x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = x.first().map_or(0, Vec::len);
    m.iter()
        .map(|row| {
            (0..cols)
                .map(|c| row.iter().zip(x).map(|(a, xr)| a * xr[c]).sum())
                .collect()
        })
        .collect()
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

pub fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}
