//! Run configuration: one JSON document, overridden by command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use bugrank::experiment::{HyperParams, MlpProfile, ProviderSpec, SplitSpec, SweepConfig};
use bugrank::features::{FieldSpec, DEFAULT_HASH_SEED};
use bugrank::models::ModelKind;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingPaths {
    pub description: PathBuf,
    pub comments: PathBuf,
}

/// Everything a run needs. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    /// `BGEMB1` files; hashed TF-IDF features are used when absent.
    pub embeddings: Option<EmbeddingPaths>,
    pub out: Option<PathBuf>,
    pub split: Option<SplitSpec>,
    pub models: Option<Vec<ModelKind>>,
    pub fractions: Option<Vec<f64>>,
    pub fields: Option<Vec<FieldSpec>>,
    /// Seeds the split shuffle and every model.
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub hashed_dim: Option<usize>,
    pub mlp_profile: Option<MlpProfile>,
    pub overrides: BTreeMap<ModelKind, HyperParams>,
    pub global: HyperParams,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::user(format!("config {}: {e}", path.display())))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::user(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        config.corpus.as_mut().map(resolve);
        config.out.as_mut().map(resolve);
        if let Some(e) = config.embeddings.as_mut() {
            resolve(&mut e.description);
            resolve(&mut e.comments);
        }
        Ok(config)
    }
}

/// Flag values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub fractions: Vec<f64>,
    pub models: Vec<ModelKind>,
    pub fields: Vec<FieldSpec>,
    pub jobs: Option<usize>,
}

/// A validated run: flags over config over defaults.
#[derive(Debug, Clone)]
pub struct Settings {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub split: SplitSpec,
    pub sweep: SweepConfig,
}

fn non_empty<T>(v: Vec<T>) -> Option<Vec<T>> {
    (!v.is_empty()).then_some(v)
}

impl Settings {
    pub fn resolve(config: RunConfig, flags: Overrides) -> Result<Self, CliError> {
        let corpus = flags
            .corpus
            .or(config.corpus)
            .ok_or_else(|| CliError::user("no corpus given (--corpus or \"corpus\" in the config)"))?;
        if !corpus.is_file() {
            return Err(CliError::user(format!("corpus file {} does not exist", corpus.display())));
        }
        let out = flags
            .out
            .or(config.out)
            .ok_or_else(|| CliError::user("no output directory given (--out or \"out\" in the config)"))?;
        if out.exists() && !out.is_dir() {
            return Err(CliError::user(format!("output path {} is not a directory", out.display())));
        }

        let defaults = SweepConfig::default();
        let seed = flags.seed.or(config.seed);
        let mut split = config.split.unwrap_or_default();
        if let Some(s) = seed {
            split.seed = s;
        }
        split.validate().map_err(CliError::user)?;

        let provider = match config.embeddings {
            Some(e) => {
                for p in [&e.description, &e.comments] {
                    if !p.is_file() {
                        return Err(CliError::user(format!("embeddings file {} does not exist", p.display())));
                    }
                }
                ProviderSpec::Precomputed {
                    description: e.description,
                    comments: e.comments,
                }
            }
            None => ProviderSpec::HashedTfidf {
                dim: config.hashed_dim.unwrap_or(100),
                seed: DEFAULT_HASH_SEED,
            },
        };
        let sweep = SweepConfig {
            models: non_empty(flags.models).or(config.models).unwrap_or(defaults.models),
            fractions: non_empty(flags.fractions).or(config.fractions).unwrap_or(defaults.fractions),
            fields: non_empty(flags.fields).or(config.fields).unwrap_or(defaults.fields),
            seed: seed.unwrap_or(defaults.seed),
            jobs: flags.jobs.or(config.jobs).unwrap_or(defaults.jobs),
            provider,
            mlp_profile: config.mlp_profile.unwrap_or(defaults.mlp_profile),
            overrides: config.overrides,
            global: config.global,
        };
        if sweep.models.is_empty() || sweep.fractions.is_empty() || sweep.fields.is_empty() {
            return Err(CliError::user("models, fractions and fields must be non-empty"));
        }
        if let Some(f) = sweep.fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
            return Err(CliError::user(format!("fraction {f} outside (0, 1)")));
        }
        if sweep.jobs == 0 {
            return Err(CliError::user("--jobs must be at least 1"));
        }
        Ok(Self {
            corpus,
            out,
            split,
            sweep,
        })
    }
}
