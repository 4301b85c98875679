//! Binary parameter checkpoints.
//!
//! Layout (little-endian): magic `BGCKPT1`, u32 kind length + kind bytes,
//! u32 config length + config JSON bytes, then one block per parameter
//! (u32 name length + name bytes, u32 rows, u32 cols, rows·cols f64), and a
//! trailing u32 CRC32 over every preceding byte.

use std::io::{Read, Write};

use super::{NumericsError, ParamStore, Tensor};
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 7] = b"BGCKPT1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T: Scalar> {
    pub kind: String,
    pub config_json: String,
    pub params: ParamStore<T>,
}

fn put_u32(buf: &mut Vec<u8>, v: usize) -> Result<(), NumericsError> {
    let v = u32::try_from(v)
        .map_err(|_| NumericsError::Checkpoint(format!("length {v} exceeds u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

fn put_bytes(buf: &mut Vec<u8>, bytes: &[u8]) -> Result<(), NumericsError> {
    put_u32(buf, bytes.len())?;
    buf.extend_from_slice(bytes);
    Ok(())
}

/// Serializes a checkpoint to bytes.
pub fn encode_checkpoint<T: Scalar>(
    kind: &str,
    config_json: &str,
    params: &ParamStore<T>,
) -> Result<Vec<u8>, NumericsError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    put_bytes(&mut buf, kind.as_bytes())?;
    put_bytes(&mut buf, config_json.as_bytes())?;
    for (name, tensor) in params.iter() {
        put_bytes(&mut buf, name.as_bytes())?;
        put_u32(&mut buf, tensor.rows())?;
        put_u32(&mut buf, tensor.cols())?;
        for v in tensor.data() {
            buf.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    Ok(buf)
}

pub fn write_checkpoint<T: Scalar, W: Write>(
    mut writer: W,
    kind: &str,
    config_json: &str,
    params: &ParamStore<T>,
) -> Result<(), NumericsError> {
    writer.write_all(&encode_checkpoint(kind, config_json, params)?)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NumericsError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| NumericsError::Checkpoint("truncated checkpoint".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<usize, NumericsError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn string(&mut self) -> Result<String, NumericsError> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| NumericsError::Checkpoint("non-UTF-8 string".into()))
    }
}

/// Parses and verifies checkpoint bytes.
pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<Checkpoint<T>, NumericsError> {
    if bytes.len() < CHECKPOINT_MAGIC.len() + 4 || &bytes[..7] != CHECKPOINT_MAGIC {
        return Err(NumericsError::Checkpoint("bad magic".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(NumericsError::Checkpoint("CRC32 mismatch".into()));
    }
    let mut cur = Cursor {
        bytes: body,
        pos: CHECKPOINT_MAGIC.len(),
    };
    let kind = cur.string()?;
    let config_json = cur.string()?;
    let mut params = ParamStore::new();
    while cur.pos < body.len() {
        let name = cur.string()?;
        let rows = cur.u32()?;
        let cols = cur.u32()?;
        let raw = cur.take(rows * cols * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        params.insert(name, Tensor::from_vec(rows, cols, data)?);
    }
    Ok(Checkpoint {
        kind,
        config_json,
        params,
    })
}

pub fn read_checkpoint<T: Scalar, R: Read>(mut reader: R) -> Result<Checkpoint<T>, NumericsError> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    decode_checkpoint(&bytes)
}
