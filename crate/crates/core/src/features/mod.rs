//! Node-aligned feature matrices built from bug descriptions and comments.

mod embfile;
mod tfidf;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{clean_text, comment_window, BugRecord, Corpus};
use crate::numerics::Tensor;
use crate::scalar::Scalar;

pub use embfile::{
    decode_embeddings, encode_embeddings, load_embeddings, save_embeddings, EmbeddingTable,
    EMBEDDING_MAGIC,
};
pub use tfidf::{hashed_tfidf_embed, token_hash, tokenize, HashedTfidf, DEFAULT_HASH_SEED, MIN_DIM};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("embedding missing for bug {0}")]
    MissingId(u64),
    #[error("embedding size mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("embedding file checksum mismatch")]
    ChecksumFailure,
    #[error("not an embedding file (bad magic)")]
    BadMagic,
    #[error("duplicate bug id {0} in embedding file")]
    DuplicateId(u64),
    #[error("bug {0} has no corpus record")]
    UnknownNode(u64),
    #[error("provider {provider} produced a non-finite value for bug {bug_id}")]
    NonFinite { provider: String, bug_id: u64 },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Text handed to a provider, with the bug it belongs to.
#[derive(Debug, Clone, Copy)]
pub struct Document<'a> {
    pub bug_id: u64,
    pub text: &'a str,
}

/// Maps a document to exactly `dim()` finite reals.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn is_deterministic(&self) -> bool;
    fn embed(&self, doc: Document<'_>) -> Result<Vec<f64>, FeatureError>;
}

/// Looks vectors up by bug id, ignoring the text. Used for externally computed embeddings.
#[derive(Debug, Clone)]
pub struct Precomputed {
    name: String,
    dim: usize,
    rows: HashMap<u64, Vec<f64>>,
}

impl Precomputed {
    pub fn new(name: impl Into<String>, table: &EmbeddingTable) -> Self {
        let rows = table
            .ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, table.row(i).iter().map(|&x| f64::from(x)).collect()))
            .collect();
        Self {
            name: name.into(),
            dim: table.dim,
            rows,
        }
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let table = decode_embeddings(&std::fs::read(path)?)?;
        Ok(Self::new(path.display().to_string(), &table))
    }
}

impl EmbeddingProvider for Precomputed {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn embed(&self, doc: Document<'_>) -> Result<Vec<f64>, FeatureError> {
        self.rows
            .get(&doc.bug_id)
            .cloned()
            .ok_or(FeatureError::MissingId(doc.bug_id))
    }
}

/// Which text fields feed the feature rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldSpec {
    Description,
    Comments,
    Both,
}

impl FieldSpec {
    pub const ALL: [FieldSpec; 3] = [FieldSpec::Both, FieldSpec::Description, FieldSpec::Comments];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldSpec::Description => "description",
            FieldSpec::Comments => "comments",
            FieldSpec::Both => "both",
        }
    }

    pub fn uses_description(self) -> bool {
        matches!(self, FieldSpec::Description | FieldSpec::Both)
    }

    pub fn uses_comments(self) -> bool {
        matches!(self, FieldSpec::Comments | FieldSpec::Both)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "description" => Ok(FieldSpec::Description),
            "comments" => Ok(FieldSpec::Comments),
            "both" => Ok(FieldSpec::Both),
            other => Err(format!("unknown field spec {other:?} (expected description, comments or both)")),
        }
    }
}

/// Dense row-major features, one row per node in graph order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub node_ids: Vec<u64>,
    pub dim: usize,
    pub data: Vec<f64>,
    pub fields: FieldSpec,
}

impl FeatureMatrix {
    pub fn new(node_ids: Vec<u64>, dim: usize, data: Vec<f64>, fields: FieldSpec) -> Result<Self, FeatureError> {
        if data.len() != node_ids.len() * dim {
            return Err(FeatureError::DimMismatch {
                expected: node_ids.len() * dim,
                actual: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(FeatureError::NonFinite {
                provider: "feature matrix".into(),
                bug_id: node_ids[i / dim.max(1)],
            });
        }
        Ok(Self {
            node_ids,
            dim,
            data,
            fields,
        })
    }

    pub fn rows(&self) -> usize {
        self.node_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_tensor<T: Scalar>(&self) -> Tensor<T> {
        Tensor::from_vec(self.rows(), self.dim, self.data.iter().map(|&x| T::lit(x)).collect())
            .expect("feature matrix shape is consistent")
    }
}

/// Cleaned description text.
pub fn description_document(record: &BugRecord) -> String {
    clean_text(&record.description)
}

/// Cleaned comments posted up to `window_end`, joined with single spaces.
pub fn comments_document(record: &BugRecord, window_end: DateTime<Utc>) -> String {
    comment_window(record, window_end)
        .into_iter()
        .map(clean_text)
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn embed_checked(provider: &dyn EmbeddingProvider, bug_id: u64, text: &str) -> Result<Vec<f64>, FeatureError> {
    let v = provider.embed(Document { bug_id, text })?;
    if v.len() != provider.dim() {
        return Err(FeatureError::DimMismatch {
            expected: provider.dim(),
            actual: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(FeatureError::NonFinite {
            provider: provider.name().to_string(),
            bug_id,
        });
    }
    Ok(v)
}

/// Features with one comment cutoff for every node.
pub fn build_features(
    corpus: &Corpus,
    node_order: &[u64],
    provider_desc: &dyn EmbeddingProvider,
    provider_comm: &dyn EmbeddingProvider,
    fields: FieldSpec,
    comment_window_end: DateTime<Utc>,
) -> Result<FeatureMatrix, FeatureError> {
    build_features_windowed(corpus, node_order, provider_desc, provider_comm, fields, &|_| {
        comment_window_end
    })
}

/// Features where each node's comments are cut off at `window_end(bug_id)`.
pub fn build_features_windowed(
    corpus: &Corpus,
    node_order: &[u64],
    provider_desc: &dyn EmbeddingProvider,
    provider_comm: &dyn EmbeddingProvider,
    fields: FieldSpec,
    window_end: &(dyn Fn(u64) -> DateTime<Utc> + Sync),
) -> Result<FeatureMatrix, FeatureError> {
    let index = corpus.index();
    let dim = if fields.uses_description() { provider_desc.dim() } else { 0 }
        + if fields.uses_comments() { provider_comm.dim() } else { 0 };
    let rows: Vec<Vec<f64>> = node_order
        .par_iter()
        .map(|&id| {
            let record = index.get(&id).ok_or(FeatureError::UnknownNode(id))?;
            let mut row = Vec::with_capacity(dim);
            if fields.uses_description() {
                row.extend(embed_checked(provider_desc, id, &description_document(record))?);
            }
            if fields.uses_comments() {
                let text = comments_document(record, window_end(id));
                row.extend(embed_checked(provider_comm, id, &text)?);
            }
            Ok(row)
        })
        .collect::<Result<_, FeatureError>>()?;
    FeatureMatrix::new(node_order.to_vec(), dim, rows.concat(), fields)
}
