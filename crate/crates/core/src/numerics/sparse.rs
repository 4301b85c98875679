use std::sync::Arc;

use super::{NumericsError, Tensor};
use crate::scalar::Scalar;

/// Compressed-sparse-row structure without values.
///
/// Column indices inside each row are strictly ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsePattern {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsePattern {
    /// Builds a pattern from per-row column lists. Lists are sorted and deduplicated.
    pub fn from_rows(cols: usize, mut row_lists: Vec<Vec<usize>>) -> Result<Self, NumericsError> {
        let rows = row_lists.len();
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for list in &mut row_lists {
            list.sort_unstable();
            list.dedup();
            if let Some(&last) = list.last() {
                if last >= cols {
                    return Err(NumericsError::IndexOutOfRange {
                        index: last,
                        bound: cols,
                    });
                }
            }
            col_idx.extend_from_slice(list);
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Range of entry positions belonging to `row`.
    pub fn row_range(&self, row: usize) -> std::ops::Range<usize> {
        self.row_ptr[row]..self.row_ptr[row + 1]
    }

    pub fn row_cols(&self, row: usize) -> &[usize] {
        &self.col_idx[self.row_range(row)]
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Row index of every stored entry, in storage order.
    pub fn entry_rows(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            out.extend(std::iter::repeat(r).take(self.row_range(r).len()));
        }
        out
    }
}

/// CSR matrix with constant values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    pattern: Arc<SparsePattern>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    pub fn new(pattern: Arc<SparsePattern>, values: Vec<T>) -> Result<Self, NumericsError> {
        if values.len() != pattern.nnz() {
            return Err(NumericsError::LengthMismatch {
                context: "sparse values",
                expected: pattern.nnz(),
                actual: values.len(),
            });
        }
        Ok(Self { pattern, values })
    }

    pub fn pattern(&self) -> &Arc<SparsePattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.pattern.rows, self.pattern.cols)
    }

    pub fn to_dense(&self) -> Tensor<T> {
        let mut out = Tensor::zeros(self.pattern.rows, self.pattern.cols);
        for r in 0..self.pattern.rows {
            for e in self.pattern.row_range(r) {
                out.set(r, self.pattern.col_idx[e], self.values[e]);
            }
        }
        out
    }

    /// `self · dense`.
    pub fn matmul_dense(&self, dense: &Tensor<T>) -> Result<Tensor<T>, NumericsError> {
        weighted_matmul(&self.pattern, &self.values, dense)
    }

    /// `selfᵀ · dense`.
    pub fn t_matmul_dense(&self, dense: &Tensor<T>) -> Result<Tensor<T>, NumericsError> {
        weighted_t_matmul(&self.pattern, &self.values, dense)
    }
}

pub(crate) fn weighted_matmul<T: Scalar>(
    pattern: &SparsePattern,
    values: &[T],
    dense: &Tensor<T>,
) -> Result<Tensor<T>, NumericsError> {
    if pattern.cols != dense.rows() {
        return Err(NumericsError::shape(
            "sparse_matmul",
            (pattern.rows, pattern.cols),
            dense.shape(),
        ));
    }
    let width = dense.cols();
    let mut out = Tensor::zeros(pattern.rows, width);
    for r in 0..pattern.rows {
        let out_row = out.row_mut(r);
        for e in pattern.row_range(r) {
            let v = values[e];
            let src = dense.row(pattern.col_idx[e]);
            for (o, &x) in out_row.iter_mut().zip(src) {
                *o += v * x;
            }
        }
    }
    Ok(out)
}

pub(crate) fn weighted_t_matmul<T: Scalar>(
    pattern: &SparsePattern,
    values: &[T],
    dense: &Tensor<T>,
) -> Result<Tensor<T>, NumericsError> {
    if pattern.rows != dense.rows() {
        return Err(NumericsError::shape(
            "sparse_t_matmul",
            (pattern.rows, pattern.cols),
            dense.shape(),
        ));
    }
    let width = dense.cols();
    let mut out = Tensor::zeros(pattern.cols, width);
    for r in 0..pattern.rows {
        for e in pattern.row_range(r) {
            let v = values[e];
            let c = pattern.col_idx[e];
            for k in 0..width {
                let add = v * dense.get(r, k);
                let cur = out.get(c, k);
                out.set(c, k, cur + add);
            }
        }
    }
    Ok(out)
}
