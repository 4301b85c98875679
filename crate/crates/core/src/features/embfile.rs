//! The `BGEMB1` binary embedding file.
//!
//! Little-endian layout: magic `BGEMB1`, u32 count, u32 dim, then `count`
//! records of (u64 bug id, dim × f32), then a u32 CRC32 over every preceding
//! byte.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::FeatureError;

pub const EMBEDDING_MAGIC: &[u8; 6] = b"BGEMB1";
const HEADER_LEN: usize = 6 + 4 + 4;

/// Rows of f32 embeddings keyed by bug id, in file or requested order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub ids: Vec<u64>,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(ids: Vec<u64>, dim: usize, data: Vec<f32>) -> Result<Self, FeatureError> {
        if data.len() != ids.len() * dim {
            return Err(FeatureError::DimMismatch {
                expected: ids.len() * dim,
                actual: data.len(),
            });
        }
        Ok(Self { ids, dim, data })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows reordered to `expected_ids`; ids not requested are dropped.
    pub fn reorder(&self, expected_ids: &[u64]) -> Result<Self, FeatureError> {
        let pos: HashMap<u64, usize> = self.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut data = Vec::with_capacity(expected_ids.len() * self.dim);
        for &id in expected_ids {
            let &i = pos.get(&id).ok_or(FeatureError::MissingId(id))?;
            data.extend_from_slice(self.row(i));
        }
        Ok(Self {
            ids: expected_ids.to_vec(),
            dim: self.dim,
            data,
        })
    }
}

pub fn encode_embeddings(table: &EmbeddingTable) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + table.len() * (8 + 4 * table.dim) + 4);
    buf.extend_from_slice(EMBEDDING_MAGIC);
    buf.extend_from_slice(&(table.len() as u32).to_le_bytes());
    buf.extend_from_slice(&(table.dim as u32).to_le_bytes());
    for (i, id) in table.ids.iter().enumerate() {
        buf.extend_from_slice(&id.to_le_bytes());
        for x in table.row(i) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingTable, FeatureError> {
    if bytes.len() < HEADER_LEN || &bytes[..6] != EMBEDDING_MAGIC {
        return Err(FeatureError::BadMagic);
    }
    let count = u32_at(bytes, 6) as usize;
    let dim = u32_at(bytes, 10) as usize;
    let record = 8 + 4 * dim;
    let expected = HEADER_LEN + count * record + 4;
    if bytes.len() != expected {
        return Err(FeatureError::DimMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let body = &bytes[..expected - 4];
    if crc32fast::hash(body) != u32_at(bytes, expected - 4) {
        return Err(FeatureError::ChecksumFailure);
    }
    let mut ids = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    let mut seen = std::collections::HashSet::with_capacity(count);
    for r in 0..count {
        let at = HEADER_LEN + r * record;
        let id = u64::from_le_bytes(body[at..at + 8].try_into().expect("8 bytes"));
        if !seen.insert(id) {
            return Err(FeatureError::DuplicateId(id));
        }
        ids.push(id);
        for chunk in body[at + 8..at + record].chunks_exact(4) {
            data.push(f32::from_le_bytes(chunk.try_into().expect("4 bytes")));
        }
    }
    Ok(EmbeddingTable { ids, dim, data })
}

pub fn save_embeddings(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<(), FeatureError> {
    fs::write(path, encode_embeddings(table))?;
    Ok(())
}

/// Reads a file and reorders its rows to `expected_ids`.
pub fn load_embeddings(path: impl AsRef<Path>, expected_ids: &[u64]) -> Result<EmbeddingTable, FeatureError> {
    decode_embeddings(&fs::read(path)?)?.reorder(expected_ids)
}
