use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Gradients, Tape, Tensor, Var};
use crate::scalar::Scalar;

/// Named parameter tensors, iterated in name order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T: Scalar> {
    params: BTreeMap<String, Arc<Tensor<T>>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            params: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<T>) {
        self.params.insert(name.into(), Arc::new(value));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.params.get(name).map(AsRef::as_ref)
    }

    /// Mutable access; clones the tensor if a tape still holds it.
    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.params.get_mut(name).map(Arc::make_mut)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v.as_ref()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.params.values().map(|t| t.len()).sum()
    }

    /// Registers every parameter as a gradient-receiving leaf.
    pub fn bind<'t>(&self, tape: &'t Tape<T>) -> BoundParams<'t, T> {
        BoundParams {
            vars: self
                .params
                .iter()
                .map(|(k, v)| (k.clone(), tape.param(Arc::clone(v))))
                .collect(),
        }
    }
}

/// Parameters registered on one tape.
pub struct BoundParams<'t, T: Scalar> {
    vars: BTreeMap<String, Var<'t, T>>,
}

impl<'t, T: Scalar> BoundParams<'t, T> {
    /// Binds externally created leaves under the given names.
    pub fn from_vars(names: impl IntoIterator<Item = String>, vars: &[Var<'t, T>]) -> Self {
        Self {
            vars: names.into_iter().zip(vars.iter().copied()).collect(),
        }
    }

    /// Panics on an unknown name: parameter names are fixed by the model code.
    pub fn var(&self, name: &str) -> Var<'t, T> {
        *self
            .vars
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    /// Collects gradients for every bound parameter; unused parameters get zeros.
    pub fn gradients(&self, grads: &Gradients<T>) -> BTreeMap<String, Tensor<T>> {
        self.vars
            .iter()
            .map(|(k, v)| {
                let g = grads.get(*v).cloned().unwrap_or_else(|| {
                    let (r, c) = v.shape();
                    Tensor::zeros(r, c)
                });
                (k.clone(), g)
            })
            .collect()
    }
}
