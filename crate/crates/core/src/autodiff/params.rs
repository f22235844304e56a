use std::ops::Index;

use serde::{Deserialize, Serialize};

use super::Tensor;

/// Index of a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
}

/// Named learnable tensors, addressed by [`ParamId`] in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.params.push(Param { name: name.into(), value });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    /// Total number of scalar entries across all parameters.
    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Flat coordinate access used by the finite-difference checker.
    pub(crate) fn coordinate_mut(&mut self, mut flat: usize) -> &mut f64 {
        for p in &mut self.params {
            let n = p.value.len();
            if flat < n {
                return &mut p.value.values_mut()[flat];
            }
            flat -= n;
        }
        panic!("flat coordinate out of range");
    }
}

impl Index<ParamId> for ParamStore {
    type Output = Tensor;

    fn index(&self, id: ParamId) -> &Tensor {
        self.get(id)
    }
}

/// One gradient tensor per parameter in the store it was computed for.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    grads: Vec<Tensor>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Self { grads: store.params.iter().map(|p| Tensor::zeros(p.value.shape())).collect() }
    }

    pub fn from_tensors(grads: Vec<Tensor>) -> Self {
        Self { grads }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.grads[id.0]
    }

    pub(crate) fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.grads[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.grads.iter().enumerate().map(|(i, g)| (ParamId(i), g))
    }

    pub fn is_all_zero(&self, id: ParamId) -> bool {
        self.grads[id.0].values().iter().all(|&v| v == 0.0)
    }

    /// Flat view across all parameters, in store order.
    pub fn flatten(&self) -> Vec<f64> {
        self.grads.iter().flat_map(|g| g.values().iter().copied()).collect()
    }
}

impl Index<ParamId> for Gradients {
    type Output = Tensor;

    fn index(&self, id: ParamId) -> &Tensor {
        self.get(id)
    }
}
