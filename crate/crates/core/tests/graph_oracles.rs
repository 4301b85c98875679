mod common;

use std::collections::BTreeMap;

use bugrank::corpus::Corpus;
use bugrank::graph::{
    build_bipartite, centrality_heat_correlation, clustering_coefficient, degree_centrality, pagerank, project,
    read_edge_list, spearman, write_edge_list, BipartiteGraph, BugBugGraph, CentralityReport, GraphError,
};
use common::{brute_projection, id_edges};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_bipartite(rng: &mut ChaCha8Rng, max_b: usize, max_p: usize) -> BipartiteGraph {
    let nb = rng.gen_range(1..=max_b);
    let np = rng.gen_range(1..=max_p);
    let density: f64 = rng.gen();
    let mut bug_ids: Vec<u64> = (0..nb).map(|_| rng.gen_range(1..100_000)).collect();
    bug_ids.sort_unstable();
    bug_ids.dedup();
    let mut edges = BTreeMap::new();
    for b in 0..bug_ids.len() {
        for p in 0..np {
            if rng.gen::<f64>() < density {
                edges.insert((b, p), common::ts(2017, 1, 1));
            }
        }
    }
    BipartiteGraph {
        bug_ids,
        package_ids: (0..np).map(|p| format!("pkg{p}")).collect(),
        edges,
    }
}

#[test]
fn projection_matches_pairwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let bg = random_bipartite(&mut rng, 12, 6);
        let g = project(&bg);
        assert_eq!(id_edges(&g), brute_projection(&bg));
        assert_eq!(g.node_ids(), bg.bug_ids.as_slice());
        for v in 0..g.node_count() {
            assert!(!g.neighbors(v).contains(&v));
            for &u in g.neighbors(v) {
                assert!(g.has_edge(u, v));
            }
        }
    }
}

#[test]
fn projection_exhaustive_on_tiny_graphs() {
    // every edge subset of a 3 x 2 bipartite graph
    for bits in 0u32..64 {
        let mut edges = BTreeMap::new();
        for b in 0..3 {
            for p in 0..2 {
                if bits & (1 << (b * 2 + p)) != 0 {
                    edges.insert((b, p), common::ts(2017, 1, 1));
                }
            }
        }
        let bg = BipartiteGraph {
            bug_ids: vec![10, 20, 30],
            package_ids: vec!["a".into(), "b".into()],
            edges,
        };
        assert_eq!(id_edges(&project(&bg)), brute_projection(&bg));
    }
}

#[test]
fn projection_on_large_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let bg = random_bipartite(&mut rng, 200, 30);
        assert_eq!(id_edges(&project(&bg)), brute_projection(&bg));
    }
}

#[test]
fn fig4_reproduces_fig6() {
    let corpus = common::fig4_corpus();
    let bg = build_bipartite(&corpus, common::ts(2018, 1, 1));
    assert_eq!(bg.edge_count(), 7);
    assert_eq!(bg.package_ids, vec!["banshee", "mono", "rhythmbox"]);
    let g = project(&bg);
    let expected: std::collections::BTreeSet<_> = common::FIG6_EDGES.into_iter().collect();
    assert_eq!(id_edges(&g), expected);
    let dc: Vec<f64> = degree_centrality(&g).unwrap();
    assert_eq!(dc[g.index_of(64371).unwrap()], 0.75);
}

#[test]
fn cutoff_and_dedupe() {
    let corpus = common::fig4_corpus();
    assert_eq!(build_bipartite(&corpus, common::ts(2016, 1, 1)).edge_count(), 0);

    let mut r = common::record(9, common::ts(2017, 5, 1), &["mono"]);
    let mut second = r.affected[0].clone();
    second.ts = common::ts(2017, 4, 1);
    r.affected.push(second);
    let bg = build_bipartite(&Corpus::new(vec![r], "dup").unwrap(), common::ts(2018, 1, 1));
    assert_eq!(bg.edge_count(), 1);
    assert_eq!(bg.edges[&(0, 0)], common::ts(2017, 4, 1));
}

#[test]
fn projection_commutes_with_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let n = rng.gen_range(2..30);
        let pkgs: Vec<String> = (0..rng.gen_range(1..8)).map(|p| format!("p{p}")).collect();
        let ids: Vec<u64> = (1..=n as u64).map(|i| i * 3).collect();
        let assignment: Vec<Vec<&str>> = (0..n)
            .map(|_| pkgs.iter().filter(|_| rng.gen_bool(0.3)).map(String::as_str).collect())
            .collect();
        let mut relabel = ids.clone();
        relabel.shuffle(&mut rng);
        let mut pkg_relabel: Vec<usize> = (0..pkgs.len()).collect();
        pkg_relabel.shuffle(&mut rng);

        let t = common::ts(2017, 1, 1);
        let original = Corpus::new(
            ids.iter().zip(&assignment).map(|(&id, a)| common::record(id, t, a)).collect(),
            "a",
        )
        .unwrap();
        let renamed: Vec<Vec<String>> = assignment
            .iter()
            .map(|a| {
                a.iter()
                    .map(|p| {
                        let k: usize = p[1..].parse().unwrap();
                        format!("q{}", pkg_relabel[k])
                    })
                    .collect()
            })
            .collect();
        let relabeled = Corpus::new(
            relabel
                .iter()
                .zip(&renamed)
                .map(|(&id, a)| common::record(id, t, &a.iter().map(String::as_str).collect::<Vec<_>>()))
                .collect(),
            "b",
        )
        .unwrap();

        let g1 = project(&build_bipartite(&original, t));
        let g2 = project(&build_bipartite(&relabeled, t));
        let map: BTreeMap<u64, u64> = ids.iter().copied().zip(relabel.iter().copied()).collect();
        let mapped: std::collections::BTreeSet<(u64, u64)> = id_edges(&g1)
            .into_iter()
            .map(|(a, b)| {
                let (x, y) = (map[&a], map[&b]);
                (x.min(y), x.max(y))
            })
            .collect();
        assert_eq!(mapped, id_edges(&g2));
    }
}

#[test]
fn pagerank_matches_dense_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..40 {
        let n = rng.gen_range(1..=50);
        let p = rng.gen_range(0.0..0.3);
        let g = common::random_graph(n, p, &mut rng);
        let pr: Vec<f64> = pagerank(&g, 0.85, 1e-10).unwrap();
        let oracle = common::dense_pagerank(&g, 0.85);
        for (a, b) in pr.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn pagerank_uniform_on_regular_graphs() {
    for n in [5usize, 8, 13] {
        let cycle = BugBugGraph::from_edges((1..=n as u64).collect(), (0..n).map(|i| (i, (i + 1) % n))).unwrap();
        let pr: Vec<f64> = pagerank(&cycle, 0.85, 1e-10).unwrap();
        assert!(pr.iter().all(|p| (p - 1.0 / n as f64).abs() < 1e-9));
    }
}

#[test]
fn clustering_matches_triple_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..20 {
        let n = rng.gen_range(1..=100);
        let g = common::random_graph(n, rng.gen_range(0.0..0.4), &mut rng);
        let c: Vec<f64> = clustering_coefficient(&g);
        assert_eq!(c, common::triple_clustering(&g));
        assert!(c.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn spearman_matches_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..200 {
        let n = rng.gen_range(2..=30);
        // small integer ranges force ties
        let span = rng.gen_range(2..40);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0..span) as f64).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0..span) as f64).collect();
        let constant = |x: &[f64]| x.iter().all(|&v| v == x[0]);
        if constant(&a) || constant(&b) {
            assert!(matches!(spearman(&a, &b), Err(GraphError::DegenerateInput)));
            continue;
        }
        let rho = spearman(&a, &b).unwrap();
        assert!((rho - common::spearman_definition(&a, &b)).abs() < 1e-12);
    }
}

#[test]
fn correlation_is_rerank_then_spearman() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let g = common::random_graph(200, 0.05, &mut rng);
    let heat: Vec<u64> = (0..200).map(|_| rng.gen_range(0..400)).collect();
    let report = centrality_heat_correlation::<f64>(&g, &heat, 20).unwrap();

    let n = g.node_count();
    let degree: Vec<f64> = (0..n).map(|v| g.degree(v) as f64 / (n - 1) as f64).collect();
    let clustering = common::triple_clustering(&g);
    let pr = common::dense_pagerank(&g, 0.85);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| heat[b].cmp(&heat[a]).then(a.cmp(&b)));
    let rho = |subset: &[usize], m: &[f64]| {
        let h: Vec<f64> = subset.iter().map(|&v| heat[v] as f64).collect();
        let x: Vec<f64> = subset.iter().map(|&v| m[v]).collect();
        common::spearman_definition(&h, &x)
    };
    let (top, bottom) = (&order[..20], &order[n - 20..]);
    let close = |a: f64, b: f64| assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    close(report.degree_top, rho(top, &degree));
    close(report.degree_bottom, rho(bottom, &degree));
    close(report.clustering_top, rho(top, &clustering));
    close(report.clustering_bottom, rho(bottom, &clustering));
    close(report.pagerank_top, rho(top, &pr));
    close(report.pagerank_bottom, rho(bottom, &pr));
}

#[test]
fn heat_in_degree_order_gives_unit_rho() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let g = common::random_graph(60, 0.2, &mut rng);
    let heat: Vec<u64> = (0..60).map(|v| g.degree(v) as u64).collect();
    let report = centrality_heat_correlation::<f64>(&g, &heat, 10).unwrap();
    assert!((report.degree_top - 1.0).abs() < 1e-12);
    assert!((report.degree_bottom - 1.0).abs() < 1e-12);
    assert!(matches!(
        centrality_heat_correlation::<f64>(&g, &heat, 31),
        Err(GraphError::InvalidK { .. })
    ));
}

#[test]
fn centrality_report_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let g = common::random_graph(80, 0.1, &mut rng);
    let r = CentralityReport::<f64>::compute(&g).unwrap();
    assert!((r.pagerank.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(r.degree_centrality.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(r.clustering_coefficient.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn edge_list_is_byte_stable() {
    let corpus = common::fig4_corpus();
    let g = project(&build_bipartite(&corpus, common::ts(2018, 1, 1)));
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.tsv"), dir.path().join("b.tsv"));
    write_edge_list(&g, &p1).unwrap();
    write_edge_list(&g, &p2).unwrap();
    let bytes = std::fs::read(&p1).unwrap();
    assert_eq!(bytes, std::fs::read(&p2).unwrap());
    assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 5);
    assert_eq!(read_edge_list(&p1).unwrap(), g);

    let lonely = Corpus::new(
        vec![common::record(1, common::ts(2017, 1, 1), &["a"]), common::record(2, common::ts(2017, 1, 1), &["b"])],
        "x",
    )
    .unwrap();
    let empty = project(&build_bipartite(&lonely, common::ts(2018, 1, 1)));
    write_edge_list(&empty, &p1).unwrap();
    assert!(std::fs::read(&p1).unwrap().is_empty());
    assert_eq!(read_edge_list(&p1).unwrap().node_count(), 2);
}
