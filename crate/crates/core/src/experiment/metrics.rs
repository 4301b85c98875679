//! MAE, MSE and MAPE over one node group.

use serde::{Deserialize, Serialize};

use super::data::{NodeMask, TargetVector};
use super::ExperimentError;
use crate::features::FieldSpec;
use crate::models::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub mse: f64,
    /// Mean of |pred - true| / true over nodes with a non-zero target; `None` if there are none.
    pub mape: Option<f64>,
    /// Nodes left out of MAPE because their target is zero.
    pub mape_excluded: usize,
    pub n_eval: usize,
}

/// Metrics of `pred` against `truth`. Both must be non-empty and of equal length.
pub fn compute_metrics(pred: &[f64], truth: &[f64]) -> Result<Metrics, ExperimentError> {
    if pred.len() != truth.len() {
        return Err(ExperimentError::MaskMismatch(format!(
            "{} predictions for {} targets",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(ExperimentError::EmptySplit("evaluation"));
    }
    let n = pred.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    let mut pct = 0.0;
    let mut pct_n = 0usize;
    for (&p, &t) in pred.iter().zip(truth) {
        let d = p - t;
        abs += d.abs();
        sq += d * d;
        if t != 0.0 {
            pct += d.abs() / t.abs();
            pct_n += 1;
        }
    }
    Ok(Metrics {
        mae: abs / n,
        mse: sq / n,
        mape: (pct_n > 0).then(|| pct / pct_n as f64),
        mape_excluded: pred.len() - pct_n,
        n_eval: pred.len(),
    })
}

/// Metrics of a full prediction vector restricted to one mask group.
pub fn evaluate(pred: &[f64], targets: &TargetVector, which: NodeMask) -> Result<Metrics, ExperimentError> {
    if pred.len() != targets.values.len() {
        return Err(ExperimentError::MaskMismatch(format!(
            "{} predictions for {} nodes",
            pred.len(),
            targets.values.len()
        )));
    }
    let idx = targets.indices(which);
    let p: Vec<f64> = idx.iter().map(|&i| pred[i]).collect();
    compute_metrics(&p, &targets.values_at(&idx))
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: ModelKind,
    pub fraction: f64,
    pub fields: FieldSpec,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "model,fraction,fields,mae,mse,mape,n_eval,mape_excluded";

    pub fn csv_row(&self) -> String {
        let m = &self.metrics;
        format!(
            "{},{:.2},{},{:.6},{:.6},{},{},{}",
            self.model,
            self.fraction,
            self.fields,
            m.mae,
            m.mse,
            m.mape.map(|v| format!("{v:.6}")).unwrap_or_default(),
            m.n_eval,
            m.mape_excluded
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let m = compute_metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((m.mae, m.mse, m.mape), (0.0, 0.0, Some(0.0)));
    }

    #[test]
    fn zero_targets_are_excluded_from_mape() {
        let m = compute_metrics(&[0.5], &[0.0]).unwrap();
        assert_eq!(m.mape, None);
        assert_eq!(m.mape_excluded, 1);
        let m = compute_metrics(&[0.5, 3.0], &[0.0, 2.0]).unwrap();
        assert_eq!(m.mape, Some(0.5));
        assert_eq!(m.mape_excluded, 1);
    }

    #[test]
    fn two_node_hand_example() {
        let m = compute_metrics(&[1.0, 5.0], &[2.0, 4.0]).unwrap();
        assert_eq!((m.mae, m.mse, m.mape), (1.0, 1.0, Some(0.375)));
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_metrics(&[1.0], &[1.0, 2.0]).is_err());
        assert!(compute_metrics(&[], &[]).is_err());
    }
}
