//! MLP, GCN, GAT and GraphSAGE regressors sharing a linear + ReLU prediction head.

mod input;
pub mod sage;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    decode_checkpoint, derive_seed, encode_checkpoint, BoundParams, NumericsError, ParamStore, Tape,
    Tensor, Var,
};
use crate::scalar::Scalar;

pub use input::GraphInput;

pub const ELU_ALPHA: f64 = 1.0;
pub const GAT_NEGATIVE_SLOPE: f64 = 0.2;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "MLP")]
    Mlp,
    #[serde(rename = "GCN")]
    Gcn,
    #[serde(rename = "GAT")]
    Gat,
    #[serde(rename = "SAGE")]
    Sage,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Mlp, ModelKind::Gcn, ModelKind::Gat, ModelKind::Sage];

    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Mlp => "MLP",
            ModelKind::Gcn => "GCN",
            ModelKind::Gat => "GAT",
            ModelKind::Sage => "SAGE",
        }
    }

    pub fn uses_graph(self) -> bool {
        self != ModelKind::Mlp
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "MLP" => Ok(ModelKind::Mlp),
            "GCN" => Ok(ModelKind::Gcn),
            "GAT" => Ok(ModelKind::Gat),
            "SAGE" | "GRAPHSAGE" => Ok(ModelKind::Sage),
            _ => Err(format!("unknown model {s:?} (expected MLP, GCN, GAT or SAGE)")),
        }
    }
}

fn default_heads() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub input_dim: usize,
    /// Hidden width; per head for GAT.
    pub hidden_dim: usize,
    #[serde(default = "default_heads")]
    pub heads: usize,
    #[serde(default)]
    pub in_dropout: f64,
    #[serde(default)]
    pub attn_dropout: f64,
    /// Neighbor samples per SAGE layer, input side first. Its length is the layer count.
    #[serde(default)]
    pub sage_samples: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            kind,
            input_dim,
            hidden_dim,
            heads: 1,
            in_dropout: 0.0,
            attn_dropout: 0.0,
            sage_samples: if kind == ModelKind::Sage { vec![5, 5] } else { Vec::new() },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return bad(format!("dims must be positive (input {}, hidden {})", self.input_dim, self.hidden_dim));
        }
        for (name, p) in [("in_dropout", self.in_dropout), ("attn_dropout", self.attn_dropout)] {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1)"));
            }
        }
        if self.heads == 0 {
            return bad("heads must be at least 1".into());
        }
        if self.kind == ModelKind::Sage && (self.sage_samples.is_empty() || self.sage_samples.contains(&0)) {
            return bad("SAGE needs positive per-layer sample counts".into());
        }
        Ok(())
    }

    fn output_width(&self) -> usize {
        match self.kind {
            ModelKind::Gat => self.hidden_dim * self.heads,
            _ => self.hidden_dim,
        }
    }
}

/// Forward-pass mode. Training enables dropout and neighbor sampling, both driven by `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train { seed: u64 },
    Eval,
}

impl Mode {
    fn seed(self, tag: u64) -> Option<u64> {
        match self {
            Mode::Train { seed } => Some(derive_seed(seed, tag)),
            Mode::Eval => None,
        }
    }
}

const TAG_INPUT: u64 = 1;
const TAG_ATTN: u64 = 2;
const TAG_SAMPLE: u64 = 3;

fn dropout<'t, T: Scalar>(x: Var<'t, T>, p: f64, mode: Mode, tag: u64) -> Result<Var<'t, T>, NumericsError> {
    match mode.seed(tag) {
        Some(seed) if p > 0.0 => x.dropout(p, seed),
        _ => Ok(x),
    }
}

fn gat_param(head: usize, what: &str) -> String {
    format!("gat.h{head:03}.{what}")
}

fn sage_param(layer: usize) -> String {
    format!("sage.l{layer}.w")
}

/// A model configuration with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Scalar> {
    pub config: ModelConfig,
    pub params: ParamStore<T>,
}

impl<T: Scalar> Model<T> {
    /// Glorot-uniform weights and zero biases from `config.seed`.
    pub fn init(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamStore::new();
        let (d, h) = (config.input_dim, config.hidden_dim);
        match config.kind {
            ModelKind::Mlp => {
                params.insert("mlp.w1", Tensor::glorot(d, h, &mut rng));
                params.insert("mlp.b1", Tensor::zeros(1, h));
            }
            ModelKind::Gcn => params.insert("gcn.w", Tensor::glorot(d, h, &mut rng)),
            ModelKind::Gat => {
                for k in 0..config.heads {
                    params.insert(gat_param(k, "w"), Tensor::glorot(d, h, &mut rng));
                    params.insert(gat_param(k, "a_self"), Tensor::glorot(h, 1, &mut rng));
                    params.insert(gat_param(k, "a_neigh"), Tensor::glorot(h, 1, &mut rng));
                }
            }
            ModelKind::Sage => {
                let mut width = d;
                for l in 0..config.sage_samples.len() {
                    params.insert(sage_param(l), Tensor::glorot(2 * width, h, &mut rng));
                    width = h;
                }
            }
        }
        params.insert("out.w", Tensor::glorot(config.output_width(), 1, &mut rng));
        params.insert("out.b", Tensor::zeros(1, 1));
        Ok(Self { config, params })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn parameter_count(&self) -> usize {
        self.params.count()
    }

    /// Predictions (`nodes.len() x 1`) for the given node indices.
    pub fn forward<'t>(
        &self,
        bound: &BoundParams<'t, T>,
        x: Var<'t, T>,
        graph: &GraphInput<T>,
        nodes: &[usize],
        mode: Mode,
    ) -> Result<Var<'t, T>, ModelError> {
        let (n, d) = x.shape();
        if d != self.config.input_dim {
            return Err(NumericsError::shape("model input", (n, d), (n, self.config.input_dim)).into());
        }
        if self.config.kind != ModelKind::Mlp && n != graph.node_count() {
            return Err(NumericsError::LengthMismatch {
                context: "feature rows vs graph nodes".into(),
                expected: graph.node_count(),
                actual: n,
            }
            .into());
        }
        let idx = Arc::new(nodes.to_vec());
        let hidden = match self.config.kind {
            ModelKind::Mlp => {
                let xb = dropout(x.gather_rows(&idx)?, self.config.in_dropout, mode, TAG_INPUT)?;
                xb.matmul(&bound.var("mlp.w1"))?.add_row(&bound.var("mlp.b1"))?.relu()
            }
            ModelKind::Gcn => self.gcn_hidden(bound, x, graph, mode)?.gather_rows(&idx)?,
            ModelKind::Gat => self.gat_hidden(bound, x, graph, mode)?.gather_rows(&idx)?,
            ModelKind::Sage => self.sage_hidden(bound, x, graph, nodes, mode)?,
        };
        Ok(hidden
            .matmul(&bound.var("out.w"))?
            .add_row(&bound.var("out.b"))?
            .relu())
    }

    fn gcn_hidden<'t>(
        &self,
        bound: &BoundParams<'t, T>,
        x: Var<'t, T>,
        graph: &GraphInput<T>,
        mode: Mode,
    ) -> Result<Var<'t, T>, NumericsError> {
        let xd = dropout(x, self.config.in_dropout, mode, TAG_INPUT)?;
        Ok(xd
            .matmul(&bound.var("gcn.w"))?
            .sparse_matmul(&graph.a_hat)?
            .elu(T::lit(ELU_ALPHA)))
    }

    /// Per-head attention coefficients and transformed features.
    fn gat_heads<'t>(
        &self,
        bound: &BoundParams<'t, T>,
        x: Var<'t, T>,
        graph: &GraphInput<T>,
        mode: Mode,
    ) -> Result<Vec<(Var<'t, T>, Var<'t, T>)>, NumericsError> {
        let xd = dropout(x, self.config.in_dropout, mode, TAG_INPUT)?;
        let slope = T::lit(GAT_NEGATIVE_SLOPE);
        (0..self.config.heads)
            .map(|k| {
                let wh = xd.matmul(&bound.var(&gat_param(k, "w")))?;
                let s_self = wh.matmul(&bound.var(&gat_param(k, "a_self")))?;
                let s_neigh = wh.matmul(&bound.var(&gat_param(k, "a_neigh")))?;
                let scores = s_self
                    .gather_rows(&graph.attention_rows)?
                    .add(&s_neigh.gather_rows(&graph.attention_cols)?)?
                    .leaky_relu(slope);
                let alpha = scores.edge_softmax(&graph.attention)?;
                Ok((alpha, wh))
            })
            .collect()
    }

    fn gat_hidden<'t>(
        &self,
        bound: &BoundParams<'t, T>,
        x: Var<'t, T>,
        graph: &GraphInput<T>,
        mode: Mode,
    ) -> Result<Var<'t, T>, NumericsError> {
        let heads = self.gat_heads(bound, x, graph, mode)?;
        let outs = heads
            .into_iter()
            .enumerate()
            .map(|(k, (alpha, wh))| {
                let alpha = dropout(alpha, self.config.attn_dropout, mode, TAG_ATTN + 16 * k as u64)?;
                alpha.edge_matmul(&graph.attention, &wh)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Var::concat_cols(&outs)?.elu(T::lit(ELU_ALPHA)))
    }

    fn sage_hidden<'t>(
        &self,
        bound: &BoundParams<'t, T>,
        x: Var<'t, T>,
        graph: &GraphInput<T>,
        nodes: &[usize],
        mode: Mode,
    ) -> Result<Var<'t, T>, NumericsError> {
        let plan = sage::plan(graph, nodes, &self.config.sage_samples, mode.seed(TAG_SAMPLE));
        let mut h = x.gather_rows(&Arc::new(plan.input_nodes))?;
        h = dropout(h, self.config.in_dropout, mode, TAG_INPUT)?;
        for (l, block) in plan.blocks.iter().enumerate() {
            let own = h.gather_rows(&block.self_rows)?;
            let agg = h.sparse_matmul(&block.mean)?;
            h = Var::concat_cols(&[own, agg])?
                .matmul(&bound.var(&sage_param(l)))?
                .elu(T::lit(ELU_ALPHA));
        }
        Ok(h)
    }

    /// Eval-mode predictions for every node.
    pub fn predict(&self, x: &Arc<Tensor<T>>, graph: &GraphInput<T>) -> Result<Vec<T>, ModelError> {
        let tape = Tape::new();
        let bound = self.params.bind(&tape);
        let xv = tape.constant(Arc::clone(x));
        let nodes: Vec<usize> = (0..x.rows()).collect();
        let out = self.forward(&bound, xv, graph, &nodes, Mode::Eval)?;
        let values = out.value().data().to_vec();
        Ok(values)
    }

    /// Eval-mode GAT attention: one `nnz x 1` column per head over `graph.attention`.
    pub fn gat_attention(&self, x: &Arc<Tensor<T>>, graph: &GraphInput<T>) -> Result<Vec<Tensor<T>>, ModelError> {
        if self.config.kind != ModelKind::Gat {
            return Err(ModelError::InvalidConfig(format!("{} has no attention", self.config.kind)));
        }
        let tape = Tape::new();
        let bound = self.params.bind(&tape);
        let heads = self.gat_heads(&bound, tape.constant(Arc::clone(x)), graph, Mode::Eval)?;
        Ok(heads.into_iter().map(|(a, _)| (*a.value()).clone()).collect())
    }

    pub fn to_checkpoint(&self) -> Result<Vec<u8>, ModelError> {
        let config = serde_json::to_string(&self.config).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        Ok(encode_checkpoint(self.config.kind.tag(), &config, &self.params)?)
    }

    pub fn from_checkpoint(bytes: &[u8]) -> Result<Self, ModelError> {
        let ckpt = decode_checkpoint::<T>(bytes)?;
        let config: ModelConfig =
            serde_json::from_str(&ckpt.config_json).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        if config.kind.tag() != ckpt.kind {
            return Err(ModelError::Checkpoint(format!(
                "kind tag {} disagrees with config {}",
                ckpt.kind, config.kind
            )));
        }
        let expected = Self::init(config.clone())?;
        let names: Vec<_> = expected.params.iter().map(|(k, t)| (k.to_string(), t.shape())).collect();
        let found: Vec<_> = ckpt.params.iter().map(|(k, t)| (k.to_string(), t.shape())).collect();
        if names != found {
            return Err(ModelError::Checkpoint("parameter layout does not match config".into()));
        }
        Ok(Self {
            config,
            params: ckpt.params,
        })
    }
}

fn eval_all<T: Scalar>(model: &Model<T>, x: &Tensor<T>, graph: &GraphInput<T>, kind: ModelKind) -> Result<Vec<T>, ModelError> {
    if model.kind() != kind {
        return Err(ModelError::InvalidConfig(format!("expected a {kind} model, got {}", model.kind())));
    }
    model.predict(&Arc::new(x.clone()), graph)
}

/// Eval-mode MLP predictions, one per feature row.
pub fn mlp_forward<T: Scalar>(model: &Model<T>, x: &Tensor<T>) -> Result<Vec<T>, ModelError> {
    eval_all(model, x, &GraphInput::edgeless(x.rows()), ModelKind::Mlp)
}

pub fn gcn_forward<T: Scalar>(model: &Model<T>, graph: &GraphInput<T>, x: &Tensor<T>) -> Result<Vec<T>, ModelError> {
    eval_all(model, x, graph, ModelKind::Gcn)
}

pub fn gat_forward<T: Scalar>(model: &Model<T>, graph: &GraphInput<T>, x: &Tensor<T>) -> Result<Vec<T>, ModelError> {
    eval_all(model, x, graph, ModelKind::Gat)
}

/// SAGE predictions for every node in the given mode.
pub fn sage_forward<T: Scalar>(
    model: &Model<T>,
    graph: &GraphInput<T>,
    x: &Tensor<T>,
    mode: Mode,
) -> Result<Vec<T>, ModelError> {
    if model.kind() != ModelKind::Sage {
        return Err(ModelError::InvalidConfig(format!("expected a SAGE model, got {}", model.kind())));
    }
    let tape = Tape::new();
    let bound = model.params.bind(&tape);
    let xv = tape.constant(x.clone());
    let nodes: Vec<usize> = (0..x.rows()).collect();
    let out = model.forward(&bound, xv, graph, &nodes, mode)?;
    let values = out.value().data().to_vec();
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BugBugGraph;
    use rand::Rng;

    fn ring(n: usize) -> BugBugGraph {
        BugBugGraph::from_edges((1..=n as u64).collect(), (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    fn random_x(n: usize, d: usize, seed: u64) -> Tensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_vec(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn config(kind: ModelKind) -> ModelConfig {
        let mut c = ModelConfig::new(kind, 4, 3);
        c.heads = 2;
        c.seed = 9;
        c
    }

    #[test]
    fn mlp_parameter_count() {
        let m = Model::<f32>::init(ModelConfig::new(ModelKind::Mlp, 1536, 1024)).unwrap();
        assert_eq!(m.parameter_count(), 1536 * 1024 + 1024 + 1024 + 1);
    }

    #[test]
    fn zero_weights_predict_zero() {
        let mut m = Model::<f64>::init(config(ModelKind::Mlp)).unwrap();
        for name in m.params.names().map(String::from).collect::<Vec<_>>() {
            m.params.get_mut(&name).unwrap().data_mut().fill(0.0);
        }
        assert_eq!(mlp_forward(&m, &random_x(5, 4, 1)).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn regular_graph_constant_rows_agree() {
        let g = GraphInput::new(&ring(6));
        let x = Tensor::<f64>::filled(6, 4, 0.3);
        for kind in [ModelKind::Gcn, ModelKind::Gat] {
            let m = Model::init(config(kind)).unwrap();
            let p = m.predict(&Arc::new(x.clone()), &g).unwrap();
            assert!(p.iter().all(|&v| (v - p[0]).abs() < 1e-14), "{kind}: {p:?}");
        }
    }

    #[test]
    fn predictions_are_non_negative() {
        let g = GraphInput::new(&ring(7));
        let x = Arc::new(random_x(7, 4, 2));
        for kind in ModelKind::ALL {
            let m = Model::init(config(kind)).unwrap();
            assert!(m.predict(&x, &g).unwrap().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn config_validation() {
        let mut c = config(ModelKind::Sage);
        c.sage_samples.clear();
        assert!(c.validate().is_err());
        let mut c = config(ModelKind::Gat);
        c.attn_dropout = 1.0;
        assert!(c.validate().is_err());
        let mut c = config(ModelKind::Gcn);
        c.hidden_dim = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = Model::<f64>::init(config(ModelKind::Gat)).unwrap();
        let back = Model::<f64>::from_checkpoint(&m.to_checkpoint().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn kind_parsing() {
        for k in ModelKind::ALL {
            assert_eq!(k.tag().parse::<ModelKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.tag()));
        }
    }

    #[test]
    fn wrong_input_width_is_shape_error() {
        let m = Model::<f64>::init(config(ModelKind::Mlp)).unwrap();
        let err = mlp_forward(&m, &random_x(3, 5, 0)).unwrap_err();
        assert!(err.to_string().contains("3x5"), "{err}");
    }
}
