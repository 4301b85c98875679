//! Seeded synthetic graphs, tasks and corpora for tests and demos.

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::data::{NodeMask, TargetVector};
use super::split::{log_rank_targets, TargetOptions};
use crate::corpus::{
    compute_heat, AffectedPackage, BugRecord, Comment, Corpus, HeatAttributes, HeatSnapshot,
};
use crate::graph::BugBugGraph;
use crate::numerics::Tensor;

/// A graph with node features and masked targets.
#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub graph: BugBugGraph,
    pub features: Tensor<f64>,
    pub targets: TargetVector,
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor<f64> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| normal.sample(rng)).collect()).expect("shape")
}

/// Erdős–Rényi graph G(n, p) with ids 1..=n.
pub fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> BugBugGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    BugBugGraph::from_edges((1..=n as u64).collect(), edges).expect("valid graph")
}

/// Every node labeled for training with ln(rank of its degree); features are standard normal.
pub fn degree_rank_task(n: usize, dim: usize, seed: u64) -> SyntheticTask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = random_graph(n, 0.12, &mut rng);
    let degrees: Vec<u64> = (0..n).map(|v| graph.degree(v) as u64).collect();
    let values = log_rank_targets(&degrees, TargetOptions::default());
    SyntheticTask {
        features: gaussian_matrix(n, dim, &mut rng),
        targets: TargetVector {
            node_ids: graph.node_ids().to_vec(),
            values,
            mask: vec![NodeMask::Train; n],
        },
        graph,
    }
}

/// Settings of [`community_task`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommunitySpec {
    pub communities: usize,
    pub community_size: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub feature_noise: f64,
    /// Share of nodes in the train/val pool; the rest are test.
    pub pool_share: f64,
}

impl Default for CommunitySpec {
    fn default() -> Self {
        Self {
            communities: 20,
            community_size: 30,
            p_in: 0.3,
            p_out: 0.001,
            feature_dim: 8,
            feature_noise: 2.0,
            pool_share: 0.5,
        }
    }
}

/// Block graph whose label is the neighbor mean of a hidden per-node attribute.
///
/// The attribute is a community level in [1, 5] plus small jitter; every feature
/// column is the node's own attribute plus heavy Gaussian noise. A `fraction` of the
/// pool is labeled for training and the rest of the pool validates.
pub fn community_task(spec: &CommunitySpec, fraction: f64, seed: u64) -> SyntheticTask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.communities * spec.community_size;
    let block = |v: usize| v / spec.community_size;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if block(i) == block(j) { spec.p_in } else { spec.p_out };
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let graph = BugBugGraph::from_edges((1..=n as u64).collect(), edges).expect("valid graph");

    let levels: Vec<f64> = (0..spec.communities).map(|_| rng.gen_range(1.0..5.0)).collect();
    let jitter = Normal::new(0.0, 0.3).expect("valid normal");
    let attr: Vec<f64> = (0..n).map(|v| levels[block(v)] + jitter.sample(&mut rng)).collect();
    let values: Vec<f64> = (0..n)
        .map(|v| {
            let nbrs = graph.neighbors(v);
            if nbrs.is_empty() {
                attr[v]
            } else {
                nbrs.iter().map(|&u| attr[u]).sum::<f64>() / nbrs.len() as f64
            }
        })
        .map(|y: f64| y.max(0.0))
        .collect();

    let noise = Normal::new(0.0, spec.feature_noise).expect("valid normal");
    let mut features = Tensor::zeros(n, spec.feature_dim);
    for v in 0..n {
        for x in features.row_mut(v) {
            *x = attr[v] + noise.sample(&mut rng);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let pool = (spec.pool_share * n as f64).round() as usize;
    let n_train = ((fraction * pool as f64).round() as usize).max(1);
    let mut mask = vec![NodeMask::Test; n];
    for (k, &v) in order[..pool].iter().enumerate() {
        mask[v] = if k < n_train { NodeMask::Train } else { NodeMask::Val };
    }
    SyntheticTask {
        targets: TargetVector {
            node_ids: graph.node_ids().to_vec(),
            values,
            mask,
        },
        graph,
        features,
    }
}

const WORDS: &[&str] = &[
    "crash", "freeze", "login", "screen", "audio", "kernel", "driver", "panel", "network", "wifi",
    "update", "install", "boot", "display", "memory", "leak", "printer", "keyboard", "session", "sound",
    "firmware", "upgrade", "package", "error", "segfault", "timeout", "mount", "disk", "battery", "suspend",
];

const PACKAGES: &[&str] = &[
    "linux", "network-manager", "pulseaudio", "xorg", "gnome-shell", "systemd", "cups", "grub2",
    "firefox", "nautilus", "ubiquity", "mesa",
];

fn sentence(rng: &mut ChaCha8Rng, words: std::ops::Range<usize>) -> String {
    let len = rng.gen_range(words);
    (0..len).map(|_| *WORDS.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

/// A small corpus laid out on the default split windows: `n_train` bugs created in
/// the first half of 2017 and `n_test` in the second half of 2018, each with heat
/// attributes and matching snapshots at both crawl dates.
pub fn tiny_corpus(n_train: usize, n_test: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train_start = Utc.with_ymd_and_hms(2017, 1, 2, 0, 0, 0).single().expect("date");
    let test_start = Utc.with_ymd_and_hms(2018, 7, 2, 0, 0, 0).single().expect("date");
    let crawls = [
        NaiveDate::from_ymd_opt(2019, 11, 30).expect("date"),
        NaiveDate::from_ymd_opt(2020, 11, 30).expect("date"),
    ];
    let mut records = Vec::new();
    for k in 0..n_train + n_test {
        let (start, offset) = if k < n_train { (train_start, k) } else { (test_start, k - n_train) };
        let created = start + Duration::hours(rng.gen_range(0..170 * 24)) + Duration::minutes(offset as i64);
        let n_comments = rng.gen_range(1..=4);
        let mut comments: Vec<Comment> = (0..n_comments)
            .map(|_| Comment {
                ts: created + Duration::days(rng.gen_range(0..500)),
                text: sentence(&mut rng, 3..12),
            })
            .collect();
        comments.sort_by_key(|c| c.ts);
        comments[0].ts = created + Duration::hours(1);
        comments.sort_by_key(|c| c.ts);
        let n_pkgs = rng.gen_range(1..=3);
        let mut pkgs: Vec<&str> = PACKAGES.choose_multiple(&mut rng, n_pkgs).copied().collect();
        pkgs.sort_unstable();
        let affected = pkgs
            .iter()
            .map(|p| AffectedPackage {
                ts: created + Duration::days(rng.gen_range(0..30)),
                package: p.to_string(),
            })
            .collect();
        let base = HeatAttributes {
            is_private: rng.gen_bool(0.05),
            is_security: rng.gen_bool(0.05),
            duplicate_count: rng.gen_range(0..4),
            affected_users: rng.gen_range(0..30),
            subscriber_count: rng.gen_range(1..15),
        };
        let later = HeatAttributes {
            affected_users: base.affected_users + rng.gen_range(0..5),
            ..base
        };
        records.push(BugRecord {
            id: 1_600_000 + (k as u64) * 7,
            reported_on: pkgs[0].to_string(),
            created_at: created,
            description: format!("{}. {}", sentence(&mut rng, 5..20), sentence(&mut rng, 6..7)),
            comments,
            affected,
            heat_snapshots: vec![
                HeatSnapshot {
                    crawl_date: crawls[0],
                    heat: compute_heat(&base),
                },
                HeatSnapshot {
                    crawl_date: crawls[1],
                    heat: compute_heat(&later),
                },
            ],
            attrs: Some(later),
        });
    }
    Corpus::new(records, format!("synthetic tiny corpus, seed {seed}")).expect("unique ids")
}
