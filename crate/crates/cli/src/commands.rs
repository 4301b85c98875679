use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bugrank::corpus::{load_corpus, validate_heat, Corpus};
use bugrank::experiment::analysis::AnchorNeighborhood;
use bugrank::experiment::sweep::{aggregate_csv, cell_file_name, cell_stem, write_reports};
use bugrank::experiment::{
    anchor_neighborhood, error_analysis, evaluate, feature_tensor, fraction_sweep, Dataset, MetricsReport, NodeMask,
    TargetVector,
};
use bugrank::features::FieldSpec;
use bugrank::graph::{build_bipartite, centrality_heat_correlation, project, read_edge_list, write_edge_list, CorrelationReport};
use bugrank::models::{Model, ModelKind};
use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::config::Settings;
use crate::error::CliError;

fn load(path: &Path) -> Result<Corpus, CliError> {
    eprintln!("loading {}", path.display());
    load_corpus(path).map_err(|e| CliError::user(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn ingest(corpus_path: &Path, validate: bool, out: Option<&Path>) -> Result<(), CliError> {
    let corpus = load(corpus_path)?;
    let s = corpus.stats();
    println!("bugs                      {}", s.bugs);
    println!("mean comments             {:.3}", s.mean_comments);
    println!("mean description words    {:.3}", s.mean_description_words);
    println!("max description words     {}", s.max_description_words);
    println!("mean comment words        {:.3}", s.mean_comment_words);
    println!("max comment words         {}", s.max_comment_words);
    println!("mean affected packages    {:.3}", s.mean_affected_packages);
    let mismatches = if validate {
        let m = validate_heat(&corpus);
        println!("heat mismatches           {}", m.len());
        for x in &m {
            println!("  bug {}: recorded {} recomputed {}", x.id, x.recorded, x.recomputed);
        }
        Some(m)
    } else {
        None
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        #[derive(Serialize)]
        struct Ingest<'a> {
            stats: &'a bugrank::corpus::CorpusStats,
            #[serde(skip_serializing_if = "Option::is_none")]
            heat_mismatches: Option<Vec<bugrank::corpus::HeatMismatch>>,
        }
        write_json(&dir.join("ingest.json"), &Ingest {
            stats: &s,
            heat_mismatches: mismatches,
        })?;
    }
    Ok(())
}

pub fn graph(corpus_path: &Path, cutoff: DateTime<Utc>, out: &Path) -> Result<(), CliError> {
    let corpus = load(corpus_path)?;
    let g = project(&build_bipartite(&corpus, cutoff));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let sidecar = write_edge_list(&g, out)?;
    eprintln!(
        "{} nodes, {} edges -> {} (+ {})",
        g.node_count(),
        g.edge_count(),
        out.display(),
        sidecar.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct Analysis {
    nodes: usize,
    edges: usize,
    correlation: CorrelationReport<f64>,
}

pub fn analyze(graph_path: &Path, corpus_path: &Path, k: usize, out: Option<&Path>) -> Result<(), CliError> {
    let g = read_edge_list(graph_path).map_err(|e| CliError::user(format!("{}: {e}", graph_path.display())))?;
    let corpus = load(corpus_path)?;
    let heat = g
        .node_ids()
        .iter()
        .map(|&id| {
            corpus
                .get(id)
                .and_then(|r| r.latest_heat())
                .ok_or_else(|| CliError::user(format!("bug {id} has no heat in {}", corpus_path.display())))
        })
        .collect::<Result<Vec<u64>, _>>()?;
    let report = Analysis {
        nodes: g.node_count(),
        edges: g.edge_count(),
        correlation: centrality_heat_correlation(&g, &heat, k)?,
    };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match out {
        Some(path) => fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(())
}

fn checkpoint_path(dir: &Path, model: ModelKind, fields: FieldSpec, fraction: f64) -> PathBuf {
    dir.join(format!("ckpt_{}.bin", cell_stem(model, fields, fraction)))
}

fn predictions_path(dir: &Path, model: ModelKind, fields: FieldSpec, fraction: f64) -> PathBuf {
    dir.join(format!("pred_{}.csv", cell_stem(model, fields, fraction)))
}

fn group_name(m: NodeMask) -> &'static str {
    match m {
        NodeMask::Train => "train",
        NodeMask::Val => "val",
        NodeMask::Test => "test",
        NodeMask::Hidden => "hidden",
    }
}

fn predictions_csv(targets: &TargetVector, pred: &[f64]) -> String {
    let mut out = String::from("bug_id,group,target,prediction\n");
    for i in 0..pred.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            targets.node_ids[i],
            group_name(targets.mask[i]),
            targets.values[i],
            pred[i]
        );
    }
    out
}

fn read_predictions(path: &Path, node_ids: &[u64]) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::user(format!("{}: {e} (run `train` first)", path.display())))?;
    let bad = |line: usize| CliError::user(format!("{}: malformed line {line}", path.display()));
    let mut by_id = HashMap::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad(n + 1));
        }
        let id: u64 = cols[0].parse().map_err(|_| bad(n + 1))?;
        let p: f64 = cols[3].parse().map_err(|_| bad(n + 1))?;
        by_id.insert(id, p);
    }
    node_ids
        .iter()
        .map(|id| {
            by_id
                .get(id)
                .copied()
                .ok_or_else(|| CliError::user(format!("{}: no prediction for bug {id}", path.display())))
        })
        .collect()
}

fn prepare(settings: &Settings) -> Result<Dataset, CliError> {
    let corpus = load(&settings.corpus)?;
    let dataset = Dataset::prepare(&corpus, &settings.split)?;
    eprintln!(
        "{} bugs selected, {} co-affection edges",
        dataset.graph.node_count(),
        dataset.graph.edge_count()
    );
    Ok(dataset)
}

pub fn train(settings: &Settings) -> Result<(), CliError> {
    let dataset = prepare(settings)?;
    eprintln!(
        "training {} cells on {} thread(s)",
        settings.sweep.cell_count(),
        settings.sweep.jobs
    );
    let cells = fraction_sweep(&dataset, &settings.sweep)?;
    let out = &settings.out;
    fs::create_dir_all(out)?;
    for c in &cells {
        let r = &c.report;
        let ckpt = c.model.to_checkpoint().map_err(CliError::internal)?;
        fs::write(checkpoint_path(out, r.model, r.fields, r.fraction), ckpt)?;
        fs::write(
            predictions_path(out, r.model, r.fields, r.fraction),
            predictions_csv(&c.targets, &c.predictions),
        )?;
    }
    let reports: Vec<MetricsReport> = cells.into_iter().map(|c| c.report).collect();
    let csv = write_reports(out, &reports)?;
    print!("{}", aggregate_csv(&reports));
    eprintln!("wrote {}", csv.display());
    Ok(())
}

pub fn evaluate_checkpoints(settings: &Settings) -> Result<(), CliError> {
    let dataset = prepare(settings)?;
    let sweep = &settings.sweep;
    let mut reports = Vec::new();
    for &fields in &sweep.fields {
        let x = feature_tensor(&dataset.features(&sweep.provider, fields)?);
        for &fraction in &sweep.fractions {
            let targets = dataset.targets(fraction)?;
            for &kind in &sweep.models {
                let path = checkpoint_path(&settings.out, kind, fields, fraction);
                let bytes = fs::read(&path)
                    .map_err(|e| CliError::user(format!("{}: {e} (run `train` first)", path.display())))?;
                let model = Model::<f64>::from_checkpoint(&bytes)
                    .map_err(|e| CliError::user(format!("{}: {e}", path.display())))?;
                if model.kind() != kind || model.config.input_dim != x.cols() {
                    return Err(CliError::user(format!(
                        "{} holds a {} model over {} features, expected {kind} over {}",
                        path.display(),
                        model.kind(),
                        model.config.input_dim,
                        x.cols()
                    )));
                }
                let pred = model.predict(&x, &dataset.graph_input).map_err(CliError::internal)?;
                let mut report = MetricsReport {
                    model: kind,
                    fraction,
                    fields,
                    metrics: evaluate(&pred, &targets, NodeMask::Test)?,
                    best_epoch: 0,
                    epochs_run: 0,
                };
                let trained = settings.out.join(cell_file_name(&report));
                if let Ok(text) = fs::read_to_string(&trained) {
                    let prior: MetricsReport = serde_json::from_str(&text)
                        .map_err(|e| CliError::user(format!("{}: {e}", trained.display())))?;
                    report.best_epoch = prior.best_epoch;
                    report.epochs_run = prior.epochs_run;
                }
                reports.push(report);
            }
        }
    }
    let csv = write_reports(&settings.out.join("evaluation"), &reports)?;
    print!("{}", aggregate_csv(&reports));
    eprintln!("wrote {}", csv.display());
    Ok(())
}

#[derive(Serialize)]
struct ErrorSummary {
    model_a: ModelKind,
    model_b: ModelKind,
    fraction: f64,
    fields: FieldSpec,
    n_test: usize,
    a_better: usize,
    a_better_pct: f64,
    a_better_with_train_neighbor: usize,
    /// Neighborhood of the test bug where model a gains the most.
    anchor_bug: Option<u64>,
    anchor: Option<AnchorNeighborhood>,
    anchor_bug_ids: Vec<u64>,
}

pub fn error_analysis_cmd(
    settings: &Settings,
    model_a: ModelKind,
    model_b: ModelKind,
) -> Result<(), CliError> {
    let dataset = prepare(settings)?;
    let fraction = settings.sweep.fractions[0];
    let fields = settings.sweep.fields[0];
    let targets = dataset.targets(fraction)?;
    let ids = dataset.node_ids();
    let pred_a = read_predictions(&predictions_path(&settings.out, model_a, fields, fraction), ids)?;
    let pred_b = read_predictions(&predictions_path(&settings.out, model_b, fields, fraction), ids)?;
    let ea = error_analysis(&pred_a, &pred_b, &targets, &dataset.graph)?;

    let anchor_bug = ea.cases.first().map(|c| c.bug_id);
    let anchor = anchor_bug
        .and_then(|id| dataset.graph.index_of(id))
        .map(|v| anchor_neighborhood(&dataset.graph, v, &targets));
    let anchor_bug_ids = anchor
        .as_ref()
        .map(|a| a.nodes.iter().map(|&v| ids[v]).collect())
        .unwrap_or_default();
    let stem = format!(
        "error_analysis_{}_vs_{}",
        model_a.tag().to_lowercase(),
        cell_stem(model_b, fields, fraction)
    );
    fs::create_dir_all(&settings.out)?;
    fs::write(settings.out.join(format!("{stem}.csv")), ea.cases_csv())?;
    let summary = ErrorSummary {
        model_a,
        model_b,
        fraction,
        fields,
        n_test: ea.n_test,
        a_better: ea.a_better,
        a_better_pct: ea.a_better_pct,
        a_better_with_train_neighbor: ea.a_better_with_train_neighbor,
        anchor_bug,
        anchor,
        anchor_bug_ids,
    };
    write_json(&settings.out.join(format!("{stem}.json")), &summary)?;
    println!(
        "{model_a} beats {model_b} on {} of {} test bugs ({:.1}%), {} of them with a training neighbor",
        ea.a_better, ea.n_test, ea.a_better_pct, ea.a_better_with_train_neighbor
    );
    Ok(())
}
