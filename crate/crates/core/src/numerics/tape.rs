//! Tape-based reverse-mode automatic differentiation over 2-D tensors.
//!
//! Every operation applied to a [`Var`] appends a node to its [`Tape`]. Calling
//! [`Tape::backward`] walks the tape in reverse and accumulates exact analytic
//! gradients into every node that depends on a leaf created with
//! [`Tape::param`]. Constants never receive gradients.

use std::cell::RefCell;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::{weighted_matmul, weighted_t_matmul, SparseMatrix, SparsePattern};
use super::{NumericsError, Tensor};
use crate::scalar::Scalar;

enum Op<T> {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    AddRow(usize, usize),
    Hadamard(usize, usize),
    Scale(usize, T),
    Relu(usize),
    Elu(usize, T),
    LeakyRelu(usize, T),
    SoftmaxRows(usize),
    Dropout(usize, Arc<Vec<T>>),
    ConcatCols(Vec<usize>),
    SparseMatMul(Arc<SparseMatrix<T>>, usize),
    GatherRows(usize, Arc<Vec<usize>>),
    EdgeSoftmax(Arc<SparsePattern>, usize),
    EdgeMatMul(Arc<SparsePattern>, usize, usize),
    SumAll(usize),
    Mae(usize, Arc<Vec<T>>),
    Mse(usize, Arc<Vec<T>>),
}

struct Node<T> {
    value: Arc<Tensor<T>>,
    op: Op<T>,
    requires_grad: bool,
}

/// Records operations for one forward/backward pass. Single-threaded.
pub struct Tape<T: Scalar> {
    nodes: RefCell<Vec<Node<T>>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t, T: Scalar> {
    tape: &'t Tape<T>,
    id: usize,
}

impl<T: Scalar> std::fmt::Debug for Var<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.shape())
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    /// Leaf that receives a gradient.
    pub fn param(&self, value: impl Into<Arc<Tensor<T>>>) -> Var<'_, T> {
        self.push(value.into(), Op::Leaf, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&self, value: impl Into<Arc<Tensor<T>>>) -> Var<'_, T> {
        self.push(value.into(), Op::Leaf, false)
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Arc<Tensor<T>>, op: Op<T>, requires_grad: bool) -> Var<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn value(&self, id: usize) -> Arc<Tensor<T>> {
        Arc::clone(&self.nodes.borrow()[id].value)
    }

    fn requires(&self, id: usize) -> bool {
        self.nodes.borrow()[id].requires_grad
    }

    /// Back-propagates from `root`, seeding its gradient with ones.
    pub fn backward(&self, root: Var<'_, T>) -> Gradients<T> {
        let nodes = self.nodes.borrow();
        let mut grads: Vec<Option<Tensor<T>>> = (0..nodes.len()).map(|_| None).collect();
        let (r, c) = nodes[root.id].value.shape();
        grads[root.id] = Some(Tensor::filled(r, c, T::one()));

        for id in (0..=root.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if node.requires_grad {
                backprop_node(&nodes, node, &g, &mut grads);
            }
            grads[id] = Some(g);
        }
        Gradients { grads }
    }
}

fn accumulate<T: Scalar>(
    nodes: &[Node<T>],
    grads: &mut [Option<Tensor<T>>],
    id: usize,
    g: Tensor<T>,
) {
    if !nodes[id].requires_grad {
        return;
    }
    match &mut grads[id] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn backprop_node<T: Scalar>(
    nodes: &[Node<T>],
    node: &Node<T>,
    g: &Tensor<T>,
    grads: &mut [Option<Tensor<T>>],
) {
    let val = |id: usize| &nodes[id].value;
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            if nodes[*a].requires_grad {
                let ga = g.matmul_t(val(*b)).expect("matmul backward shape");
                accumulate(nodes, grads, *a, ga);
            }
            if nodes[*b].requires_grad {
                let gb = val(*a).t_matmul(g).expect("matmul backward shape");
                accumulate(nodes, grads, *b, gb);
            }
        }
        Op::Add(a, b) => {
            accumulate(nodes, grads, *a, g.clone());
            accumulate(nodes, grads, *b, g.clone());
        }
        Op::AddRow(a, row) => {
            accumulate(nodes, grads, *a, g.clone());
            if nodes[*row].requires_grad {
                let mut gr = Tensor::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (acc, &v) in gr.row_mut(0).iter_mut().zip(g.row(r)) {
                        *acc += v;
                    }
                }
                accumulate(nodes, grads, *row, gr);
            }
        }
        Op::Hadamard(a, b) => {
            if nodes[*a].requires_grad {
                accumulate(nodes, grads, *a, g.zip_map(val(*b), |x, y| x * y));
            }
            if nodes[*b].requires_grad {
                accumulate(nodes, grads, *b, g.zip_map(val(*a), |x, y| x * y));
            }
        }
        Op::Scale(a, s) => {
            let s = *s;
            accumulate(nodes, grads, *a, g.map(|x| x * s));
        }
        Op::Relu(a) => {
            let ga = g.zip_map(val(*a), |gv, x| if x > T::zero() { gv } else { T::zero() });
            accumulate(nodes, grads, *a, ga);
        }
        Op::Elu(a, alpha) => {
            let alpha = *alpha;
            let ga = g.zip_map(val(*a), |gv, x| {
                if x > T::zero() {
                    gv
                } else {
                    gv * alpha * x.exp()
                }
            });
            accumulate(nodes, grads, *a, ga);
        }
        Op::LeakyRelu(a, slope) => {
            let slope = *slope;
            let ga = g.zip_map(val(*a), |gv, x| if x > T::zero() { gv } else { gv * slope });
            accumulate(nodes, grads, *a, ga);
        }
        Op::SoftmaxRows(a) => {
            let y = &node.value;
            let mut ga = Tensor::zeros(y.rows(), y.cols());
            for r in 0..y.rows() {
                let dot: T = y.row(r).iter().zip(g.row(r)).map(|(&p, &q)| p * q).sum();
                for (c, out) in ga.row_mut(r).iter_mut().enumerate() {
                    *out = y.get(r, c) * (g.get(r, c) - dot);
                }
            }
            accumulate(nodes, grads, *a, ga);
        }
        Op::Dropout(a, mask) => {
            let mut ga = g.clone();
            for (v, &m) in ga.data_mut().iter_mut().zip(mask.iter()) {
                *v *= m;
            }
            accumulate(nodes, grads, *a, ga);
        }
        Op::ConcatCols(parts) => {
            let mut offset = 0;
            for &p in parts {
                let width = val(p).cols();
                if nodes[p].requires_grad {
                    let mut gp = Tensor::zeros(g.rows(), width);
                    for r in 0..g.rows() {
                        gp.row_mut(r)
                            .copy_from_slice(&g.row(r)[offset..offset + width]);
                    }
                    accumulate(nodes, grads, p, gp);
                }
                offset += width;
            }
        }
        Op::SparseMatMul(m, a) => {
            let ga = m.t_matmul_dense(g).expect("sparse backward shape");
            accumulate(nodes, grads, *a, ga);
        }
        Op::GatherRows(a, idx) => {
            let src = val(*a);
            let mut ga = Tensor::zeros(src.rows(), src.cols());
            for (r, &i) in idx.iter().enumerate() {
                for (acc, &v) in ga.row_mut(i).iter_mut().zip(g.row(r)) {
                    *acc += v;
                }
            }
            accumulate(nodes, grads, *a, ga);
        }
        Op::EdgeSoftmax(pattern, a) => {
            let y = node.value.data();
            let gd = g.data();
            let mut ga = vec![T::zero(); y.len()];
            for r in 0..pattern.rows() {
                let range = pattern.row_range(r);
                let dot: T = range.clone().map(|e| y[e] * gd[e]).sum();
                for e in range {
                    ga[e] = y[e] * (gd[e] - dot);
                }
            }
            accumulate(nodes, grads, *a, Tensor::column(ga));
        }
        Op::EdgeMatMul(pattern, values, dense) => {
            let w = val(*values).data();
            let x = val(*dense);
            if nodes[*dense].requires_grad {
                let gx = weighted_t_matmul(pattern, w, g).expect("edge matmul backward");
                accumulate(nodes, grads, *dense, gx);
            }
            if nodes[*values].requires_grad {
                let mut gw = vec![T::zero(); w.len()];
                for r in 0..pattern.rows() {
                    let g_row = g.row(r);
                    for e in pattern.row_range(r) {
                        let x_row = x.row(pattern.col_idx()[e]);
                        gw[e] = g_row.iter().zip(x_row).map(|(&p, &q)| p * q).sum();
                    }
                }
                accumulate(nodes, grads, *values, Tensor::column(gw));
            }
        }
        Op::SumAll(a) => {
            let s = g.get(0, 0);
            let (r, c) = val(*a).shape();
            accumulate(nodes, grads, *a, Tensor::filled(r, c, s));
        }
        Op::Mae(a, target) => {
            let s = g.get(0, 0);
            let pred = val(*a);
            let n = T::from_count(target.len());
            let data = pred
                .data()
                .iter()
                .zip(target.iter())
                .map(|(&p, &t)| {
                    let d = p - t;
                    let sign = if d > T::zero() {
                        T::one()
                    } else if d < T::zero() {
                        -T::one()
                    } else {
                        T::zero()
                    };
                    s * sign / n
                })
                .collect();
            accumulate(nodes, grads, *a, Tensor::column(data));
        }
        Op::Mse(a, target) => {
            let s = g.get(0, 0);
            let pred = val(*a);
            let n = T::from_count(target.len());
            let two = T::lit(2.0);
            let data = pred
                .data()
                .iter()
                .zip(target.iter())
                .map(|(&p, &t)| s * two * (p - t) / n)
                .collect();
            accumulate(nodes, grads, *a, Tensor::column(data));
        }
    }
}

/// Gradients produced by [`Tape::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient of the root with respect to `var`, if it depends on a parameter.
    pub fn get(&self, var: Var<'_, T>) -> Option<&Tensor<T>> {
        self.grads.get(var.id).and_then(Option::as_ref)
    }
}

impl<'t, T: Scalar> Var<'t, T> {
    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    pub fn value(&self) -> Arc<Tensor<T>> {
        self.tape.value(self.id)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.nodes.borrow()[self.id].value.shape()
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.requires(self.id)
    }

    fn unary(&self, value: Tensor<T>, op: Op<T>) -> Var<'t, T> {
        self.tape
            .push(Arc::new(value), op, self.requires_grad())
    }

    fn binary(&self, other: &Var<'t, T>, value: Tensor<T>, op: Op<T>) -> Var<'t, T> {
        let rg = self.requires_grad() || other.requires_grad();
        self.tape.push(Arc::new(value), op, rg)
    }

    pub fn matmul(&self, rhs: &Var<'t, T>) -> Result<Var<'t, T>, NumericsError> {
        let out = self.value().matmul(&rhs.value())?;
        Ok(self.binary(rhs, out, Op::MatMul(self.id, rhs.id)))
    }

    pub fn add(&self, rhs: &Var<'t, T>) -> Result<Var<'t, T>, NumericsError> {
        let (a, b) = (self.value(), rhs.value());
        if a.shape() != b.shape() {
            return Err(NumericsError::shape("add", a.shape(), b.shape()));
        }
        let out = a.zip_map(&b, |x, y| x + y);
        Ok(self.binary(rhs, out, Op::Add(self.id, rhs.id)))
    }

    /// Adds a `1 x cols` row to every row.
    pub fn add_row(&self, row: &Var<'t, T>) -> Result<Var<'t, T>, NumericsError> {
        let (a, b) = (self.value(), row.value());
        if b.rows() != 1 || b.cols() != a.cols() {
            return Err(NumericsError::shape("add_row", a.shape(), b.shape()));
        }
        let mut out = (*a).clone();
        for r in 0..out.rows() {
            for (o, &v) in out.row_mut(r).iter_mut().zip(b.row(0)) {
                *o += v;
            }
        }
        Ok(self.binary(row, out, Op::AddRow(self.id, row.id)))
    }

    /// Elementwise product.
    pub fn hadamard(&self, rhs: &Var<'t, T>) -> Result<Var<'t, T>, NumericsError> {
        let (a, b) = (self.value(), rhs.value());
        if a.shape() != b.shape() {
            return Err(NumericsError::shape("hadamard", a.shape(), b.shape()));
        }
        let out = a.zip_map(&b, |x, y| x * y);
        Ok(self.binary(rhs, out, Op::Hadamard(self.id, rhs.id)))
    }

    pub fn scale(&self, s: T) -> Var<'t, T> {
        let out = self.value().map(|x| x * s);
        self.unary(out, Op::Scale(self.id, s))
    }

    pub fn relu(&self) -> Var<'t, T> {
        let out = self.value().map(|x| if x > T::zero() { x } else { T::zero() });
        self.unary(out, Op::Relu(self.id))
    }

    /// ELU with the given `alpha` (1.0 is the usual choice).
    pub fn elu(&self, alpha: T) -> Var<'t, T> {
        let out = self
            .value()
            .map(|x| if x > T::zero() { x } else { alpha * x.exp_m1() });
        self.unary(out, Op::Elu(self.id, alpha))
    }

    pub fn leaky_relu(&self, slope: T) -> Var<'t, T> {
        let out = self
            .value()
            .map(|x| if x > T::zero() { x } else { slope * x });
        self.unary(out, Op::LeakyRelu(self.id, slope))
    }

    pub fn softmax_rows(&self) -> Var<'t, T> {
        let x = self.value();
        let mut out = Tensor::zeros(x.rows(), x.cols());
        for r in 0..x.rows() {
            softmax_into(x.row(r), out.row_mut(r));
        }
        self.unary(out, Op::SoftmaxRows(self.id))
    }

    /// Inverted dropout: surviving entries are scaled by `1 / (1 - p)`.
    /// `p == 0` returns `self` unchanged.
    pub fn dropout(&self, p: f64, seed: u64) -> Result<Var<'t, T>, NumericsError> {
        if !(0.0..1.0).contains(&p) {
            return Err(NumericsError::InvalidArgument(format!(
                "dropout probability {p} outside [0, 1)"
            )));
        }
        if p == 0.0 {
            return Ok(*self);
        }
        let x = self.value();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keep = T::lit(1.0 / (1.0 - p));
        let mask: Vec<T> = (0..x.len())
            .map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep })
            .collect();
        let mut out = (*x).clone();
        for (v, &m) in out.data_mut().iter_mut().zip(&mask) {
            *v *= m;
        }
        Ok(self.unary(out, Op::Dropout(self.id, Arc::new(mask))))
    }

    /// Concatenates along columns; all parts must have the same row count.
    pub fn concat_cols(parts: &[Var<'t, T>]) -> Result<Var<'t, T>, NumericsError> {
        let first = parts
            .first()
            .ok_or_else(|| NumericsError::InvalidArgument("concat of zero tensors".into()))?;
        let values: Vec<_> = parts.iter().map(Var::value).collect();
        let rows = values[0].rows();
        for v in &values {
            if v.rows() != rows {
                return Err(NumericsError::shape("concat_cols", values[0].shape(), v.shape()));
            }
        }
        let width: usize = values.iter().map(|v| v.cols()).sum();
        let mut out = Tensor::zeros(rows, width);
        for r in 0..rows {
            let mut offset = 0;
            for v in &values {
                out.row_mut(r)[offset..offset + v.cols()].copy_from_slice(v.row(r));
                offset += v.cols();
            }
        }
        let rg = parts.iter().any(Var::requires_grad);
        let ids = parts.iter().map(|p| p.id).collect();
        Ok(first
            .tape
            .push(Arc::new(out), Op::ConcatCols(ids), rg))
    }

    /// `matrix · self` for a constant sparse matrix.
    pub fn sparse_matmul(
        &self,
        matrix: &Arc<SparseMatrix<T>>,
    ) -> Result<Var<'t, T>, NumericsError> {
        let out = matrix.matmul_dense(&self.value())?;
        Ok(self.unary(out, Op::SparseMatMul(Arc::clone(matrix), self.id)))
    }

    /// Selects rows by index; indices may repeat.
    pub fn gather_rows(&self, idx: &Arc<Vec<usize>>) -> Result<Var<'t, T>, NumericsError> {
        let x = self.value();
        let mut out = Tensor::zeros(idx.len(), x.cols());
        for (r, &i) in idx.iter().enumerate() {
            if i >= x.rows() {
                return Err(NumericsError::IndexOutOfRange {
                    index: i,
                    bound: x.rows(),
                });
            }
            out.row_mut(r).copy_from_slice(x.row(i));
        }
        Ok(self.unary(out, Op::GatherRows(self.id, Arc::clone(idx))))
    }

    /// Softmax of an `nnz x 1` score column within each row segment of `pattern`.
    pub fn edge_softmax(&self, pattern: &Arc<SparsePattern>) -> Result<Var<'t, T>, NumericsError> {
        let s = self.value();
        if s.shape() != (pattern.nnz(), 1) {
            return Err(NumericsError::shape("edge_softmax", (pattern.nnz(), 1), s.shape()));
        }
        let mut out = vec![T::zero(); s.len()];
        for r in 0..pattern.rows() {
            let range = pattern.row_range(r);
            softmax_into(&s.data()[range.clone()], &mut out[range]);
        }
        Ok(self.unary(
            Tensor::column(out),
            Op::EdgeSoftmax(Arc::clone(pattern), self.id),
        ))
    }

    /// Sparse product where `self` (`nnz x 1`) holds the entry values of `pattern`.
    pub fn edge_matmul(
        &self,
        pattern: &Arc<SparsePattern>,
        dense: &Var<'t, T>,
    ) -> Result<Var<'t, T>, NumericsError> {
        let w = self.value();
        if w.shape() != (pattern.nnz(), 1) {
            return Err(NumericsError::shape("edge_matmul", (pattern.nnz(), 1), w.shape()));
        }
        let out = weighted_matmul(pattern, w.data(), &dense.value())?;
        Ok(self.binary(
            dense,
            out,
            Op::EdgeMatMul(Arc::clone(pattern), self.id, dense.id),
        ))
    }

    pub fn sum_all(&self) -> Var<'t, T> {
        let out = Tensor::scalar(self.value().sum());
        self.unary(out, Op::SumAll(self.id))
    }

    /// Mean absolute error against `target`; `self` must be `n x 1`.
    pub fn mae_loss(&self, target: &[T]) -> Result<Var<'t, T>, NumericsError> {
        let p = self.value();
        check_loss_shape("mae_loss", p.shape(), target.len())?;
        let out = Tensor::scalar(super::loss::mae(p.data(), target)?);
        Ok(self.unary(out, Op::Mae(self.id, Arc::new(target.to_vec()))))
    }

    /// Mean squared error against `target`; `self` must be `n x 1`.
    pub fn mse_loss(&self, target: &[T]) -> Result<Var<'t, T>, NumericsError> {
        let p = self.value();
        check_loss_shape("mse_loss", p.shape(), target.len())?;
        let out = Tensor::scalar(super::loss::mse(p.data(), target)?);
        Ok(self.unary(out, Op::Mse(self.id, Arc::new(target.to_vec()))))
    }
}

fn check_loss_shape(op: &'static str, shape: (usize, usize), n: usize) -> Result<(), NumericsError> {
    if shape.1 != 1 || shape.0 != n || n == 0 {
        return Err(NumericsError::shape(op, shape, (n, 1)));
    }
    Ok(())
}

fn softmax_into<T: Scalar>(x: &[T], out: &mut [T]) {
    if x.is_empty() {
        return;
    }
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for (o, &v) in out.iter_mut().zip(x) {
        *o = (v - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: usize, cols: usize, data: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn relu_backward_subgradient() {
        let tape = Tape::new();
        let x = tape.param(t(1, 2, &[-1.0, 2.0]));
        let y = x.relu();
        let g = tape.backward(y);
        assert_eq!(g.get(x).unwrap().data(), &[0.0, 1.0]);
    }

    #[test]
    fn matmul_shape_and_error_message() {
        let tape = Tape::new();
        let a = tape.param(Tensor::<f64>::zeros(2, 3));
        let b = tape.param(Tensor::<f64>::zeros(3, 4));
        assert_eq!(a.matmul(&b).unwrap().shape(), (2, 4));
        let msg = b.matmul(&a).unwrap_err().to_string();
        assert!(msg.contains("3x4") && msg.contains("2x3"), "{msg}");
    }

    #[test]
    fn constants_get_no_gradient() {
        let tape = Tape::new();
        let c = tape.constant(t(1, 1, &[3.0]));
        let w = tape.param(t(1, 1, &[2.0]));
        let y = c.matmul(&w).unwrap();
        let g = tape.backward(y);
        assert!(g.get(c).is_none());
        assert_eq!(g.get(w).unwrap().data(), &[3.0]);
    }

    #[test]
    fn mae_gradient_sign_rule() {
        let tape = Tape::<f64>::new();
        let p = tape.param(Tensor::column(vec![2.0, 1.0, 5.0]));
        let loss = p.mae_loss(&[1.0, 1.0, 6.0]).unwrap();
        assert!((loss.value().get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        let g = tape.backward(loss);
        let third = 1.0 / 3.0;
        assert_eq!(g.get(p).unwrap().data(), &[third, 0.0, -third]);
    }

    #[test]
    fn dropout_zero_is_identity_and_seeded() {
        let tape = Tape::new();
        let x = tape.param(Tensor::<f64>::filled(4, 4, 1.0));
        let same = x.dropout(0.0, 1).unwrap();
        assert_eq!(same.value().data(), x.value().data());
        let a = x.dropout(0.5, 9).unwrap().value();
        let b = x.dropout(0.5, 9).unwrap().value();
        assert_eq!(a.data(), b.data());
        assert!(a.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn loss_length_mismatch_is_an_error() {
        let tape = Tape::new();
        let p = tape.param(Tensor::column(vec![1.0, 2.0]));
        assert!(p.mae_loss(&[1.0]).is_err());
    }
}
