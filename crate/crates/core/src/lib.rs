//! Bug severity ranking on the bug-bug co-affection graph.
//!
//! The pipeline: load and score bug records ([`corpus`]), build the
//! bug-package bipartite graph and its bug-bug projection ([`graph`]), embed
//! bug texts ([`features`]), and regress log-rank severity with an MLP, GCN,
//! GAT or GraphSAGE model ([`models`]) trained on the autodiff substrate in
//! [`numerics`]. [`experiment`] wires the temporal split, training-fraction
//! sweep, metrics and error analysis together.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which the pipeline uses throughout.

pub mod corpus;
pub mod experiment;
pub mod features;
pub mod graph;
pub mod models;
pub mod numerics;
mod scalar;

pub use scalar::Scalar;

pub type Tensor = numerics::Tensor<f64>;
pub type Tape = numerics::Tape<f64>;
pub type ParamStore = numerics::ParamStore<f64>;
pub type AdamState = numerics::AdamState<f64>;
pub type SparseMatrix = numerics::SparseMatrix<f64>;

pub type Model = models::Model<f64>;
pub type GraphInput = models::GraphInput<f64>;
