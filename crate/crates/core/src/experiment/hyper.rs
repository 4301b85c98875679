//! Per-model, per-fraction default hyperparameters and user overrides.

use serde::{Deserialize, Serialize};

use super::train::{LossKind, TrainConfig};
use super::ExperimentError;
use crate::models::{ModelConfig, ModelKind};

const PAPER_GRID: &str = include_str!("../../data/hyperparams.json");

/// Fraction values the shipped grid covers.
pub const FRACTIONS: [f64; 5] = [0.70, 0.50, 0.25, 0.10, 0.05];

/// A partial hyperparameter assignment; unset fields fall through to the next layer.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HyperParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_dropout: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attn_dropout: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sage_samples: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossKind>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        HyperParams { $($f: $top.$f.clone().or_else(|| $base.$f.clone()),)* }
    };
}

impl HyperParams {
    /// Fields set in `top` win.
    pub fn overlay(&self, top: &HyperParams) -> HyperParams {
        overlay!(
            self, top, hidden_dim, heads, in_dropout, attn_dropout, sage_samples, learning_rate, eps,
            weight_decay, batch_size, max_epochs, patience, loss
        )
    }

    /// Concrete model and training configs.
    pub fn resolve(&self, kind: ModelKind, input_dim: usize, seed: u64) -> (ModelConfig, TrainConfig) {
        let minibatch = matches!(kind, ModelKind::Mlp | ModelKind::Sage);
        let mut model = ModelConfig::new(kind, input_dim, self.hidden_dim.unwrap_or(64));
        model.heads = self.heads.unwrap_or(1);
        model.in_dropout = self.in_dropout.unwrap_or(0.0);
        model.attn_dropout = self.attn_dropout.unwrap_or(0.0);
        if let Some(s) = &self.sage_samples {
            model.sage_samples = s.clone();
        }
        model.seed = seed;
        let mut train = TrainConfig::new(self.learning_rate.unwrap_or(0.01));
        train.eps = self.eps.unwrap_or(train.eps);
        train.weight_decay = self.weight_decay.unwrap_or(0.0);
        train.batch_size = if minibatch { Some(self.batch_size.unwrap_or(64)) } else { self.batch_size };
        train.max_epochs = self.max_epochs.unwrap_or(train.max_epochs);
        train.patience = self.patience.unwrap_or(train.patience);
        train.loss = self.loss.unwrap_or_default();
        (model, train)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub model: ModelKind,
    pub fraction: f64,
    #[serde(flatten)]
    pub params: HyperParams,
}

/// Which MLP settings back the text-only model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MlpProfile {
    /// Per-fraction settings for 1536-dimensional sentence embeddings.
    #[default]
    Sentence,
    /// One fixed setting for the 100-dimensional document baseline.
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub graph_common: HyperParams,
    pub mlp_baseline: HyperParams,
    pub cells: Vec<GridCell>,
}

impl HyperGrid {
    /// The shipped per-fraction settings.
    pub fn paper() -> Self {
        serde_json::from_str(PAPER_GRID).expect("bundled hyperparameter grid parses")
    }

    pub fn defaults(&self, kind: ModelKind, fraction: f64, mlp: MlpProfile) -> Result<HyperParams, ExperimentError> {
        if kind == ModelKind::Mlp && mlp == MlpProfile::Baseline {
            return Ok(self.mlp_baseline.clone());
        }
        let cell = self
            .cells
            .iter()
            .find(|c| c.model == kind && (c.fraction - fraction).abs() < 1e-9)
            .ok_or(ExperimentError::NoDefaults { model: kind, fraction })?;
        Ok(if kind.uses_graph() {
            self.graph_common.overlay(&cell.params)
        } else {
            cell.params.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_every_cell() {
        let grid = HyperGrid::paper();
        for kind in ModelKind::ALL {
            for f in FRACTIONS {
                grid.defaults(kind, f, MlpProfile::Sentence).unwrap();
            }
        }
        assert_eq!(grid.cells.len(), 20);
    }

    #[test]
    fn gat_low_fraction_cell() {
        let p = HyperGrid::paper().defaults(ModelKind::Gat, 0.05, MlpProfile::Sentence).unwrap();
        let (m, t) = p.resolve(ModelKind::Gat, 1536, 0);
        assert_eq!((m.heads, m.hidden_dim), (32, 32));
        assert_eq!((t.learning_rate, m.in_dropout, m.attn_dropout), (0.015, 0.6, 0.3));
        assert_eq!((t.patience, t.loss, t.batch_size), (15, LossKind::Mae, None));
    }

    #[test]
    fn sage_and_mlp_minibatch() {
        let grid = HyperGrid::paper();
        let (m, t) = grid.defaults(ModelKind::Sage, 0.5, MlpProfile::Sentence).unwrap().resolve(ModelKind::Sage, 8, 0);
        assert_eq!((m.sage_samples.clone(), m.hidden_dim, t.batch_size), (vec![6, 6], 128, Some(64)));
        let (m, t) = grid.defaults(ModelKind::Mlp, 0.25, MlpProfile::Sentence).unwrap().resolve(ModelKind::Mlp, 8, 0);
        assert_eq!((m.hidden_dim, t.learning_rate, t.eps, t.weight_decay), (1024, 4e-3, 1e-5, 0.01));
        let (m, t) = grid.defaults(ModelKind::Mlp, 0.25, MlpProfile::Baseline).unwrap().resolve(ModelKind::Mlp, 8, 0);
        assert_eq!((m.hidden_dim, t.max_epochs), (128, 20));
    }

    #[test]
    fn overlay_prefers_top() {
        let base = HyperParams {
            learning_rate: Some(0.1),
            hidden_dim: Some(8),
            ..Default::default()
        };
        let top = HyperParams {
            learning_rate: Some(0.2),
            ..Default::default()
        };
        let m = base.overlay(&top);
        assert_eq!((m.learning_rate, m.hidden_dim), (Some(0.2), Some(8)));
    }

    #[test]
    fn unknown_fraction_has_no_defaults() {
        assert!(HyperGrid::paper().defaults(ModelKind::Gcn, 0.3, MlpProfile::Sentence).is_err());
    }
}
