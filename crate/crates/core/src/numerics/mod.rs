//! Dense/sparse tensors, reverse-mode autodiff, losses, Adam, checkpoints.

mod adam;
mod checkpoint;
pub mod gradcheck;
pub mod loss;
mod params;
mod sparse;
mod tape;
mod tensor;

use thiserror::Error;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, Checkpoint,
    CHECKPOINT_MAGIC,
};
pub use loss::{mae, mse};
pub use params::{BoundParams, ParamStore};
pub use sparse::{SparseMatrix, SparsePattern};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

/// Derives an independent stream seed from a base seed and a tag (splitmix64 mixing).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("shape mismatch in {op}: {}x{} vs {}x{}", left.0, left.1, right.0, right.1)]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("length mismatch in {context}: expected {expected}, got {actual}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NumericsError {
    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Self::ShapeMismatch { op, left, right }
    }
}
