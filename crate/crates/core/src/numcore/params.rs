use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Named<T> {
    pub name: String,
    pub value: Matrix<T>,
}

/// Named parameter matrices in a fixed order, plus optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet<T> {
    entries: Vec<Named<T>>,
    first_moment: Vec<Matrix<T>>,
    second_moment: Vec<Matrix<T>>,
    step: u64,
}

impl<T: Scalar> Default for ParameterSet<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ParameterSet<T> {
    pub fn new() -> Self {
        ParameterSet {
            entries: Vec::new(),
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step: 0,
        }
    }

    /// Appends a parameter. Names must be unique.
    pub fn insert(&mut self, name: impl Into<String>, value: Matrix<T>) -> Result<()> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate parameter `{name}`"
            )));
        }
        let (r, c) = value.shape();
        self.first_moment.push(Matrix::zeros(r, c));
        self.second_moment.push(Matrix::zeros(r, c));
        self.entries.push(Named { name, value });
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, value: Matrix<T>) -> Result<Self> {
        self.insert(name, value)?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn get(&self, name: &str) -> Result<&Matrix<T>> {
        self.index_of(name)
            .map(|i| &self.entries[i].value)
            .ok_or_else(|| Error::UnknownParameter(name.to_owned()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Matrix<T>> {
        match self.index_of(name) {
            Some(i) => Ok(&mut self.entries[i].value),
            None => Err(Error::UnknownParameter(name.to_owned())),
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix<T>)> {
        self.entries.iter().map(|e| (e.name.as_str(), &e.value))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Matrix<T>)> {
        self.entries
            .iter_mut()
            .map(|e| (e.name.as_str(), &mut e.value))
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    pub fn first_moment(&self, name: &str) -> Result<&Matrix<T>> {
        self.index_of(name)
            .map(|i| &self.first_moment[i])
            .ok_or_else(|| Error::UnknownParameter(name.to_owned()))
    }

    pub fn second_moment(&self, name: &str) -> Result<&Matrix<T>> {
        self.index_of(name)
            .map(|i| &self.second_moment[i])
            .ok_or_else(|| Error::UnknownParameter(name.to_owned()))
    }

    pub fn zeros_like(&self) -> Gradients<T> {
        Gradients {
            entries: self
                .entries
                .iter()
                .map(|e| Named {
                    name: e.name.clone(),
                    value: Matrix::zeros(e.value.rows(), e.value.cols()),
                })
                .collect(),
        }
    }

    /// Parameter values converted to another scalar type. Optimizer state is reset.
    pub fn cast<U: Scalar>(&self) -> ParameterSet<U> {
        let mut out = ParameterSet::new();
        for e in &self.entries {
            out.insert(e.name.clone(), e.value.cast())
                .expect("names already unique");
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.entries.iter().map(|e| e.value.len()).sum()
    }

    pub(crate) fn moments_mut(
        &mut self,
    ) -> (
        &mut [Named<T>],
        &mut [Matrix<T>],
        &mut [Matrix<T>],
        &mut u64,
    ) {
        (
            &mut self.entries,
            &mut self.first_moment,
            &mut self.second_moment,
            &mut self.step,
        )
    }
}

/// Gradient buffers keyed like the [`ParameterSet`] they were created from.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    entries: Vec<Named<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, name: &str) -> Result<&Matrix<T>> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| &e.value)
            .ok_or_else(|| Error::UnknownParameter(name.to_owned()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Matrix<T>> {
        self.entries
            .iter_mut()
            .find(|e| e.name == name)
            .map(|e| &mut e.value)
            .ok_or_else(|| Error::UnknownParameter(name.to_owned()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix<T>)> {
        self.entries.iter().map(|e| (e.name.as_str(), &e.value))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Matrix<T>)> {
        self.entries
            .iter_mut()
            .map(|e| (e.name.as_str(), &mut e.value))
    }

    /// Disjoint mutable borrows of several buffers at once.
    pub fn many_mut<const N: usize>(&mut self, names: [&str; N]) -> Result<[&mut Matrix<T>; N]> {
        let mut slots: [Option<&mut Matrix<T>>; N] = std::array::from_fn(|_| None);
        for e in self.entries.iter_mut() {
            if let Some(k) = names.iter().position(|n| *n == e.name) {
                slots[k] = Some(&mut e.value);
            }
        }
        if let Some(k) = slots.iter().position(Option::is_none) {
            return Err(Error::UnknownParameter(names[k].to_owned()));
        }
        Ok(slots.map(|s| s.expect("checked above")))
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) -> Result<()> {
        for e in &mut self.entries {
            e.value.add_assign(other.get(&e.name)?);
        }
        Ok(())
    }

    pub fn zero(&mut self) {
        for e in &mut self.entries {
            e.value.fill(T::zero());
        }
    }

    pub fn scale(&mut self, factor: T) {
        for e in &mut self.entries {
            e.value.scale(factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.value.is_finite())
    }
}
