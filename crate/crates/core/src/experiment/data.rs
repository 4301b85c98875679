//! The transductive dataset: graph over every selected bug, node features and masked targets.

use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::split::{log_rank_targets, temporal_split, Split, SplitSpec};
use super::ExperimentError;
use crate::corpus::Corpus;
use crate::features::{
    build_features_windowed, comments_document, description_document, EmbeddingProvider, FeatureMatrix,
    FieldSpec, HashedTfidf, Precomputed,
};
use crate::graph::{build_bipartite, project, BugBugGraph};
use crate::models::GraphInput;
use crate::numerics::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeMask {
    Train,
    Val,
    Test,
    Hidden,
}

/// Per-node log-rank targets with the group each node belongs to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetVector {
    pub node_ids: Vec<u64>,
    pub values: Vec<f64>,
    pub mask: Vec<NodeMask>,
}

impl TargetVector {
    pub fn indices(&self, which: NodeMask) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i] == which).collect()
    }

    pub fn values_at(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.values[i]).collect()
    }

    pub fn count(&self, which: NodeMask) -> usize {
        self.mask.iter().filter(|&&m| m == which).count()
    }
}

/// Ranks each group separately: train and val by heat at the training crawl, test at the test crawl.
pub fn build_targets(
    corpus: &Corpus,
    node_ids: &[u64],
    split: &Split,
    spec: &SplitSpec,
) -> Result<TargetVector, ExperimentError> {
    let index = corpus.index();
    let pos: std::collections::HashMap<u64, usize> =
        node_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut values = vec![0.0; node_ids.len()];
    let mut mask = vec![NodeMask::Hidden; node_ids.len()];
    let groups = [
        (NodeMask::Train, &split.train, spec.train_heat_crawl),
        (NodeMask::Val, &split.val, spec.train_heat_crawl),
        (NodeMask::Test, &split.test, spec.test_heat_crawl),
    ];
    for (which, ids, crawl) in groups {
        let heats = ids
            .iter()
            .map(|&id| {
                index
                    .get(&id)
                    .and_then(|r| r.heat_at(crawl))
                    .ok_or(ExperimentError::MissingHeat { bug_id: id, crawl })
            })
            .collect::<Result<Vec<u64>, _>>()?;
        for (&id, t) in ids.iter().zip(log_rank_targets(&heats, spec.targets)) {
            let &i = pos.get(&id).ok_or(ExperimentError::UnknownNode(id))?;
            values[i] = t;
            mask[i] = which;
        }
    }
    Ok(TargetVector {
        node_ids: node_ids.to_vec(),
        values,
        mask,
    })
}

/// Where node embeddings come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProviderSpec {
    /// Hashed TF-IDF fitted on the selected bugs' own documents.
    HashedTfidf { dim: usize, seed: u64 },
    /// `BGEMB1` files, one per text field.
    Precomputed { description: PathBuf, comments: PathBuf },
}

impl Default for ProviderSpec {
    fn default() -> Self {
        ProviderSpec::HashedTfidf {
            dim: 100,
            seed: crate::features::DEFAULT_HASH_SEED,
        }
    }
}

/// Graph and per-node text windows shared by every cell of a sweep.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub spec: SplitSpec,
    /// Training pool and test group, before the train/val cut.
    pub base_split: Split,
    pub graph: BugBugGraph,
    pub graph_input: GraphInput<f64>,
    corpus: Corpus,
    test_ids: HashSet<u64>,
}

impl Dataset {
    /// Selects bugs and builds the co-affection graph over all of them.
    pub fn prepare(corpus: &Corpus, spec: &SplitSpec) -> Result<Self, ExperimentError> {
        let base_split = temporal_split(corpus, spec)?;
        let keep: HashSet<u64> = base_split.all_ids().into_iter().collect();
        let records = corpus.records().iter().filter(|r| keep.contains(&r.id)).cloned().collect();
        let selected = Corpus::new(records, corpus.provenance.clone())?;
        let graph = project(&build_bipartite(&selected, spec.graph_cutoff()));
        Ok(Self {
            spec: spec.clone(),
            graph_input: GraphInput::new(&graph),
            test_ids: base_split.test.iter().copied().collect(),
            base_split,
            graph,
            corpus: selected,
        })
    }

    pub fn node_ids(&self) -> &[u64] {
        self.graph.node_ids()
    }

    pub fn comment_end(&self, id: u64) -> chrono::DateTime<chrono::Utc> {
        if self.test_ids.contains(&id) {
            self.spec.test_comment_end
        } else {
            self.spec.train_comment_end
        }
    }

    /// Split and targets for one training fraction; the pool is reshuffled by the spec seed.
    pub fn targets(&self, fraction: f64) -> Result<TargetVector, ExperimentError> {
        let split = temporal_split(&self.corpus, &self.spec.with_fraction(fraction))?;
        build_targets(&self.corpus, self.node_ids(), &split, &self.spec)
    }

    pub fn features(&self, provider: &ProviderSpec, fields: FieldSpec) -> Result<FeatureMatrix, ExperimentError> {
        let (desc, comm): (Box<dyn EmbeddingProvider>, Box<dyn EmbeddingProvider>) = match provider {
            ProviderSpec::HashedTfidf { dim, seed } => {
                let records: Vec<_> = self.node_ids().iter().map(|id| self.corpus.get(*id).expect("selected")).collect();
                let descs: Vec<String> = records.iter().map(|r| description_document(r)).collect();
                let comms: Vec<String> = records
                    .iter()
                    .map(|r| comments_document(r, self.comment_end(r.id)))
                    .collect();
                (
                    Box::new(HashedTfidf::fit(&descs, *dim, *seed)?),
                    Box::new(HashedTfidf::fit(&comms, *dim, *seed)?),
                )
            }
            ProviderSpec::Precomputed { description, comments } => (
                Box::new(Precomputed::from_file(description)?),
                Box::new(Precomputed::from_file(comments)?),
            ),
        };
        Ok(build_features_windowed(
            &self.corpus,
            self.node_ids(),
            desc.as_ref(),
            comm.as_ref(),
            fields,
            &|id| self.comment_end(id),
        )?)
    }
}

/// Shares features between concurrently trained models.
pub fn feature_tensor(features: &FeatureMatrix) -> Arc<Tensor<f64>> {
    Arc::new(features.to_tensor())
}
