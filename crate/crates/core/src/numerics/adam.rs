//! Adam with bias correction and decoupled weight decay.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{NumericsError, ParamStore, Tensor};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub eps: f64,
    pub weight_decay: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
}

fn default_beta1() -> f64 {
    0.9
}

fn default_beta2() -> f64 {
    0.999
}

impl AdamConfig {
    pub fn new(learning_rate: f64, eps: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            eps,
            weight_decay,
            beta1: default_beta1(),
            beta2: default_beta2(),
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self::new(1e-3, 1e-8, 0.0)
    }
}

/// Optimizer state: first/second moments per parameter name and the step count.
#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    pub config: AdamConfig,
    moments: BTreeMap<String, (Tensor<T>, Tensor<T>)>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            moments: BTreeMap::new(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update. Parameters without an entry in `grads` are treated as having zero gradient.
    pub fn step(
        &mut self,
        params: &mut ParamStore<T>,
        grads: &BTreeMap<String, Tensor<T>>,
    ) -> Result<(), NumericsError> {
        for (name, g) in grads {
            let p = params
                .get(name)
                .ok_or_else(|| NumericsError::InvalidArgument(format!("no parameter {name}")))?;
            if p.shape() != g.shape() {
                return Err(NumericsError::shape("adam_step", p.shape(), g.shape()));
            }
        }

        self.step += 1;
        let cfg = self.config;
        let lr = T::lit(cfg.learning_rate);
        let eps = T::lit(cfg.eps);
        let decay = T::lit(cfg.learning_rate * cfg.weight_decay);
        let b1 = T::lit(cfg.beta1);
        let b2 = T::lit(cfg.beta2);
        let one = T::one();
        let step = i32::try_from(self.step).unwrap_or(i32::MAX);
        let bc1 = one - b1.powi(step);
        let bc2 = one - b2.powi(step);

        let names: Vec<String> = params.names().map(str::to_owned).collect();
        for name in names {
            let param = params.get_mut(&name).expect("name from store");
            let (rows, cols) = param.shape();
            let (m, v) = self
                .moments
                .entry(name.clone())
                .or_insert_with(|| (Tensor::zeros(rows, cols), Tensor::zeros(rows, cols)));
            let grad = grads.get(&name);
            for i in 0..param.len() {
                let g = grad.map_or(T::zero(), |g| g.data()[i]);
                let mi = &mut m.data_mut()[i];
                *mi = b1 * *mi + (one - b1) * g;
                let vi = &mut v.data_mut()[i];
                *vi = b2 * *vi + (one - b2) * g * g;
                let m_hat = m.data()[i] / bc1;
                let v_hat = v.data()[i] / bc2;
                let p = &mut param.data_mut()[i];
                *p -= decay * *p;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(name: &str, v: &[f64]) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.insert(name, Tensor::column(v.to_vec()));
        s
    }

    fn grads(name: &str, v: &[f64]) -> BTreeMap<String, Tensor<f64>> {
        BTreeMap::from([(name.to_owned(), Tensor::column(v.to_vec()))])
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = single("w", &[1.0, -2.0]);
        let mut adam = AdamState::new(AdamConfig::new(0.1, 1e-8, 0.0));
        for _ in 0..5 {
            adam.step(&mut p, &grads("w", &[0.0, 0.0])).unwrap();
        }
        assert_eq!(p.get("w").unwrap().data(), &[1.0, -2.0]);
    }

    #[test]
    fn descends_on_square() {
        let mut p = single("w", &[1.0]);
        let mut adam = AdamState::new(AdamConfig::new(0.1, 1e-8, 0.0));
        adam.step(&mut p, &grads("w", &[2.0])).unwrap();
        assert!(p.get("w").unwrap().data()[0] < 1.0);
    }

    #[test]
    fn decoupled_decay_precedes_delta() {
        // zero gradient isolates the decay term
        let mut p = single("w", &[2.0]);
        let mut adam = AdamState::new(AdamConfig::new(0.1, 1e-8, 0.5));
        adam.step(&mut p, &grads("w", &[0.0])).unwrap();
        assert!((p.get("w").unwrap().data()[0] - 1.9).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = single("w", &[1.0, 2.0]);
        let mut adam = AdamState::new(AdamConfig::default());
        let err = adam.step(&mut p, &grads("w", &[1.0])).unwrap_err();
        assert!(matches!(err, NumericsError::ShapeMismatch { .. }));
        assert_eq!(adam.step_count(), 0);
    }
}
