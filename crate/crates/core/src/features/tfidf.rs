//! Signed feature hashing with TF-IDF weights.

use std::collections::{BTreeMap, BTreeSet};

use super::{Document, EmbeddingProvider, FeatureError};

pub const MIN_DIM: usize = 8;
pub const DEFAULT_HASH_SEED: u64 = 0x5eed_b06_u64;

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded 64-bit token hash: FNV-1a over the bytes, then a splitmix finalizer.
pub fn token_hash(token: &str, seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325_u64 ^ splitmix64(seed);
    for &b in token.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(h)
}

/// Bucket from the low bits, sign from the top bit.
fn bucket_and_sign(token: &str, seed: u64, dim: usize) -> (usize, f64) {
    let h = token_hash(token, seed);
    let bucket = (h % dim as u64) as usize;
    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
    (bucket, sign)
}

/// Document frequencies fitted on a reference corpus.
#[derive(Debug, Clone)]
pub struct HashedTfidf {
    name: String,
    dim: usize,
    seed: u64,
    n_docs: usize,
    df: BTreeMap<String, usize>,
}

impl HashedTfidf {
    pub fn fit<S: AsRef<str>>(texts: &[S], dim: usize, seed: u64) -> Result<Self, FeatureError> {
        if texts.is_empty() {
            return Err(FeatureError::InvalidArgument("empty reference corpus".into()));
        }
        if dim < MIN_DIM {
            return Err(FeatureError::InvalidArgument(format!(
                "hashed tf-idf dim {dim} below minimum {MIN_DIM}"
            )));
        }
        let mut df = BTreeMap::new();
        for text in texts {
            let unique: BTreeSet<String> = tokenize(text.as_ref()).into_iter().collect();
            for t in unique {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        Ok(Self {
            name: format!("hashed-tfidf-{dim}"),
            dim,
            seed,
            n_docs: texts.len(),
            df,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn idf(&self, token: &str) -> f64 {
        let df = self.df.get(token).copied().unwrap_or(0);
        ((1 + self.n_docs) as f64 / (1 + df) as f64).ln() + 1.0
    }

    pub fn embed_text(&self, text: &str) -> Vec<f64> {
        let mut tf: BTreeMap<String, usize> = BTreeMap::new();
        for t in tokenize(text) {
            *tf.entry(t).or_insert(0) += 1;
        }
        let mut v = vec![0.0; self.dim];
        for (token, count) in &tf {
            let (bucket, sign) = bucket_and_sign(token, self.seed, self.dim);
            v[bucket] += sign * *count as f64 * self.idf(token);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        v
    }
}

impl EmbeddingProvider for HashedTfidf {
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
        Ok(self.embed_text(doc.text))
    }
}

/// Fits on `texts` with the default seed and embeds `target`.
pub fn hashed_tfidf_embed<S: AsRef<str>>(
    texts: &[S],
    dim: usize,
    target: &str,
) -> Result<Vec<f64>, FeatureError> {
    Ok(HashedTfidf::fit(texts, dim, DEFAULT_HASH_SEED)?.embed_text(target))
}
