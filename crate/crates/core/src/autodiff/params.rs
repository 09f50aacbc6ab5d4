use std::collections::HashMap;

use super::Tensor;
use crate::error::{Error, Result};

/// Index of a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

/// Named, ordered collection of trainable tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::InvalidArgument(format!("duplicate parameter {name}")));
        }
        let id = ParamId(self.tensors.len());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.tensors.push(tensor.with_grad(true));
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.names
            .iter()
            .zip(&self.tensors)
            .enumerate()
            .map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

/// Gradient per parameter. Missing entries are zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    entries: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.entries.get(id.0).and_then(Option::as_ref)
    }

    pub fn set(&mut self, id: ParamId, t: Tensor) {
        if self.entries.len() <= id.0 {
            self.entries.resize(id.0 + 1, None);
        }
        self.entries[id.0] = Some(t);
    }

    /// Add `values` into the entry for `id`, creating it with `shape` if absent.
    pub fn accumulate(&mut self, id: ParamId, shape: &[usize], values: &[f64]) {
        if self.entries.len() <= id.0 {
            self.entries.resize(id.0 + 1, None);
        }
        match &mut self.entries[id.0] {
            Some(t) => {
                for (a, b) in t.data_mut().iter_mut().zip(values) {
                    *a += b;
                }
            }
            slot @ None => {
                *slot = Some(Tensor::new(shape.to_vec(), values.to_vec()).expect("gradient shape"));
            }
        }
    }

    pub fn merge(&mut self, other: &Gradients) {
        for (i, t) in other.entries.iter().enumerate() {
            if let Some(t) = t {
                self.accumulate(ParamId(i), t.shape(), t.data());
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for t in self.entries.iter_mut().flatten() {
            t.data_mut().iter_mut().for_each(|v| *v *= c);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.entries.iter().flatten().map(Tensor::sq_norm).sum::<f64>().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.as_ref().map(|t| (ParamId(i), t)))
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().flatten().all(Tensor::is_finite)
    }
}
