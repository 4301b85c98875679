//! The models × fractions × field-specs grid, run as independent parallel cells.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{feature_tensor, Dataset, NodeMask, ProviderSpec, TargetVector};
use super::hyper::{HyperGrid, HyperParams, MlpProfile, FRACTIONS};
use super::metrics::{evaluate, MetricsReport};
use super::train::run_training;
use super::ExperimentError;
use crate::features::FieldSpec;
use crate::models::{Model, ModelKind};

fn default_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

fn default_fractions() -> Vec<f64> {
    FRACTIONS.to_vec()
}

fn default_fields() -> Vec<FieldSpec> {
    vec![FieldSpec::Both]
}

fn default_jobs() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default = "default_fields")]
    pub fields: Vec<FieldSpec>,
    /// Seeds model initialization, dropout, sampling and batching.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default)]
    pub provider: ProviderSpec,
    #[serde(default)]
    pub mlp_profile: MlpProfile,
    /// Applied on top of the per-fraction defaults, for every fraction.
    #[serde(default)]
    pub overrides: BTreeMap<ModelKind, HyperParams>,
    /// Applied last, to every model.
    #[serde(default)]
    pub global: HyperParams,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            models: default_models(),
            fractions: default_fractions(),
            fields: default_fields(),
            seed: 0,
            jobs: default_jobs(),
            provider: ProviderSpec::default(),
            mlp_profile: MlpProfile::default(),
            overrides: BTreeMap::new(),
            global: HyperParams::default(),
        }
    }
}

impl SweepConfig {
    pub fn cell_count(&self) -> usize {
        self.models.len() * self.fractions.len() * self.fields.len()
    }

    pub fn hyperparams(&self, grid: &HyperGrid, kind: ModelKind, fraction: f64) -> Result<HyperParams, ExperimentError> {
        let mut p = grid.defaults(kind, fraction, self.mlp_profile)?;
        if let Some(o) = self.overrides.get(&kind) {
            p = p.overlay(o);
        }
        Ok(p.overlay(&self.global))
    }
}

/// A finished cell: its report, the best-validation model and eval-mode predictions for every node.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub report: MetricsReport,
    pub model: Model<f64>,
    pub predictions: Vec<f64>,
    pub targets: TargetVector,
}

/// Runs every (fields, fraction, model) cell; results come back in that nested order.
pub fn fraction_sweep(dataset: &Dataset, config: &SweepConfig) -> Result<Vec<CellResult>, ExperimentError> {
    let grid = HyperGrid::paper();
    let features = config
        .fields
        .iter()
        .map(|&f| Ok((f, feature_tensor(&dataset.features(&config.provider, f)?))))
        .collect::<Result<BTreeMap<_, _>, ExperimentError>>()?;
    let targets = config
        .fractions
        .iter()
        .map(|&f| dataset.targets(f))
        .collect::<Result<Vec<_>, _>>()?;

    let mut cells = Vec::with_capacity(config.cell_count());
    for &fields in &config.fields {
        for (fi, &fraction) in config.fractions.iter().enumerate() {
            for &kind in &config.models {
                cells.push((fields, fi, fraction, kind));
            }
        }
    }

    let run = |&(fields, fi, fraction, kind): &(FieldSpec, usize, f64, ModelKind)| -> Result<CellResult, ExperimentError> {
        let x = &features[&fields];
        let hp = config.hyperparams(&grid, kind, fraction)?;
        let (model_cfg, train_cfg) = hp.resolve(kind, x.cols(), config.seed);
        let trained = run_training(&model_cfg, &dataset.graph_input, x, &targets[fi], &train_cfg)?;
        let predictions = trained.model.predict(x, &dataset.graph_input)?;
        let metrics = evaluate(&predictions, &targets[fi], NodeMask::Test)?;
        Ok(CellResult {
            report: MetricsReport {
                model: kind,
                fraction,
                fields,
                metrics,
                best_epoch: trained.best_epoch,
                epochs_run: trained.trace.len(),
            },
            model: trained.model,
            predictions,
            targets: targets[fi].clone(),
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::InvalidSpec(format!("thread pool: {e}")))?;
    pool.install(|| cells.par_iter().map(run).collect())
}

pub fn aggregate_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(MetricsReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// `<model>_<fields>_<percent>`, e.g. `gat_both_05`.
pub fn cell_stem(model: ModelKind, fields: FieldSpec, fraction: f64) -> String {
    format!("{}_{}_{:02}", model.tag().to_lowercase(), fields, (fraction * 100.0).round() as u32)
}

pub fn cell_file_name(r: &MetricsReport) -> String {
    format!("cell_{}.json", cell_stem(r.model, r.fields, r.fraction))
}

/// Writes one JSON file per cell, `reports.json` and `aggregate.csv`. Returns the CSV path.
pub fn write_reports(dir: &Path, reports: &[MetricsReport]) -> Result<PathBuf, ExperimentError> {
    fs::create_dir_all(dir)?;
    for r in reports {
        fs::write(dir.join(cell_file_name(r)), serde_json::to_string_pretty(r)? + "\n")?;
    }
    fs::write(dir.join("reports.json"), serde_json::to_string_pretty(reports)? + "\n")?;
    let csv = dir.join("aggregate.csv");
    fs::write(&csv, aggregate_csv(reports))?;
    Ok(csv)
}
