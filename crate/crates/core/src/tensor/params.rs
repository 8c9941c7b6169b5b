use super::graph::Graph;
use super::Tensor;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct Parameter {
    pub name: String,
    pub value: Tensor,
    #[serde(skip)]
    pub grad: Option<Vec<f64>>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Named parameters plus per-parameter Adam moments.
///
/// Names are unique and shapes never change once created. Iteration is in
/// creation order.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ParameterStore {
    params: Vec<Parameter>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
    step: u64,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates a parameter, or returns the existing one with the same name
    /// if its shape matches.
    pub fn get_or_create(&mut self, name: &str, init: Tensor) -> Result<ParamId> {
        if let Some(&i) = self.index.get(name) {
            if self.params[i].value.shape() != init.shape() {
                return Err(Error::Dimension {
                    op: "parameter",
                    lhs: self.params[i].value.shape().to_vec(),
                    rhs: init.shape().to_vec(),
                });
            }
            return Ok(ParamId(i));
        }
        let n = init.numel();
        self.params.push(Parameter {
            name: name.to_string(),
            value: init,
            grad: None,
            m: vec![0.0; n],
            v: vec![0.0; n],
        });
        self.index.insert(name.to_string(), self.params.len() - 1);
        Ok(ParamId(self.params.len() - 1))
    }

    /// Weight matrix `[fan_in, fan_out]` drawn uniformly in
    /// `±sqrt(6 / (fan_in + fan_out))`.
    pub fn weight<R: Rng + ?Sized>(
        &mut self,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Result<ParamId> {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        self.get_or_create(name, Tensor::matrix(fan_in, fan_out, data)?)
    }

    pub fn bias(&mut self, name: &str, n: usize) -> Result<ParamId> {
        self.get_or_create(name, Tensor::zeros(&[n]))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).map(|&i| ParamId(i))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> Option<&[f64]> {
        self.params[id.0].grad.as_deref()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn has_grads(&self) -> bool {
        self.params.iter().any(|p| p.grad.is_some())
    }

    /// Adds `g` into the gradient buffer of `id`.
    pub fn add_grad(&mut self, id: ParamId, g: &[f64]) {
        let p = &mut self.params[id.0];
        let buf = p.grad.get_or_insert_with(|| vec![0.0; p.value.numel()]);
        for (b, v) in buf.iter_mut().zip(g) {
            *b += v;
        }
    }

    /// Folds the gradients of a finished backward pass into the store.
    /// Every parameter leaf on the tape gets a buffer, zero if unreached.
    pub fn accumulate(&mut self, graph: &Graph) {
        for &(id, var) in graph.param_vars() {
            match graph.grad(var) {
                Some(g) => self.add_grad(id, g),
                None => {
                    let p = &mut self.params[id.0];
                    p.grad.get_or_insert_with(|| vec![0.0; p.value.numel()]);
                }
            }
        }
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad = None;
        }
    }

    pub fn grad_norm(&self) -> f64 {
        self.params
            .iter()
            .filter_map(|p| p.grad.as_ref())
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// L2 norm of the gradients of all parameters whose name starts with
    /// `prefix`.
    pub fn grad_norm_with_prefix(&self, prefix: &str) -> f64 {
        self.params
            .iter()
            .filter(|p| p.name.starts_with(prefix))
            .filter_map(|p| p.grad.as_ref())
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn rebuild_index(&mut self) {
        self.index = self
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), i))
            .collect();
    }

    pub(crate) fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub(crate) fn from_parts(params: Vec<Parameter>, step: u64) -> Self {
        let mut s = ParameterStore {
            params,
            index: BTreeMap::new(),
            step,
        };
        s.rebuild_index();
        s
    }
}

/// Scales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(store: &mut ParameterStore, max_norm: f64) -> f64 {
    let norm = store.grad_norm();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for p in &mut store.params {
            if let Some(g) = &mut p.grad {
                g.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
    norm
}

/// Adaptive-moment optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Adam {
    pub fn with_lr(lr: f64) -> Self {
        Adam {
            lr,
            ..Adam::default()
        }
    }

    /// One update over every parameter that holds a gradient, then clears
    /// the gradients and bumps the step counter.
    pub fn step(&self, store: &mut ParameterStore) -> Result<()> {
        if !store.has_grads() {
            return Err(Error::contract("optimizer step without gradients"));
        }
        store.step += 1;
        let t = store.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for p in &mut store.params {
            let Some(g) = p.grad.take() else { continue };
            let w = p.value.data_mut();
            for j in 0..g.len() {
                p.m[j] = self.beta1 * p.m[j] + (1.0 - self.beta1) * g[j];
                p.v[j] = self.beta2 * p.v[j] + (1.0 - self.beta2) * g[j] * g[j];
                let mh = p.m[j] / bc1;
                let vh = p.v[j] / bc2;
                w[j] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_grad(store: &mut ParameterStore, id: ParamId) {
        // f(w) = sum w², gradient 2w
        let mut g = Graph::new();
        let w = g.param(store, id);
        let sq = g.mul(w, w).unwrap();
        let loss = g.sum(sq);
        g.backward(loss).unwrap();
        store.accumulate(&g);
    }

    #[test]
    fn one_step_descends() {
        let mut store = ParameterStore::new();
        let id = store.get_or_create("w", Tensor::vector(vec![1.0])).unwrap();
        quad_grad(&mut store, id);
        Adam::with_lr(0.1).step(&mut store).unwrap();
        let w = store.value(id).data()[0];
        assert!(w < 1.0);
        assert_eq!(store.step_count(), 1);
        assert!(store.grad(id).is_none());
    }

    #[test]
    fn zero_gradient_leaves_parameter() {
        let mut store = ParameterStore::new();
        let id = store.get_or_create("w", Tensor::vector(vec![0.7, -0.2])).unwrap();
        store.add_grad(id, &[0.0, 0.0]);
        Adam::default().step(&mut store).unwrap();
        assert_eq!(store.value(id).data(), &[0.7, -0.2]);
    }

    #[test]
    fn step_without_gradients_is_contract_error() {
        let mut store = ParameterStore::new();
        store.get_or_create("w", Tensor::vector(vec![1.0])).unwrap();
        assert!(matches!(
            Adam::default().step(&mut store),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn quadratic_converges_to_origin() {
        let mut store = ParameterStore::new();
        let id = store
            .get_or_create("w", Tensor::vector(vec![1.3, -0.8]))
            .unwrap();
        let opt = Adam::with_lr(0.05);
        for _ in 0..500 {
            quad_grad(&mut store, id);
            opt.step(&mut store).unwrap();
        }
        let w = store.value(id).data();
        assert!(w.iter().all(|v| v.abs() < 1e-3), "{w:?}");
    }

    #[test]
    fn names_unique_shapes_fixed() {
        let mut store = ParameterStore::new();
        let a = store.bias("b", 3).unwrap();
        let b = store.bias("b", 3).unwrap();
        assert_eq!(a, b);
        assert!(store.bias("b", 4).is_err());
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut store = ParameterStore::new();
        let id = store.bias("b", 2).unwrap();
        store.add_grad(id, &[30.0, 40.0]);
        let before = clip_global_norm(&mut store, 5.0);
        assert!((before - 50.0).abs() < 1e-12);
        assert!((store.grad_norm() - 5.0).abs() < 1e-12);
    }
}
