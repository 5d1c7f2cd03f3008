use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sparse row with strictly increasing indices and finite non-zero values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SparseVector<T> {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from arbitrary-order pairs. Duplicate indices are summed and
    /// zeros dropped; non-finite values and out-of-range indices are errors.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, T)>) -> Result<Self> {
        pairs.sort_by_key(|p| p.0);
        let mut indices: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut values: Vec<T> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: i + 1,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() = *values.last().unwrap() + v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        let mut out = Self {
            dim,
            indices,
            values,
        };
        out.drop_zeros();
        Ok(out)
    }

    pub fn from_dense(dense: &[T]) -> Result<Self> {
        let pairs = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, &v)| (i, v))
            .collect();
        Self::from_pairs(dense.len(), pairs)
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().any(|v| v.is_zero()) {
            let (i, v): (Vec<usize>, Vec<T>) = self
                .indices
                .iter()
                .zip(&self.values)
                .filter(|(_, v)| !v.is_zero())
                .map(|(&i, &v)| (i, v))
                .unzip();
            self.indices = i;
            self.values = v;
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, i: usize) -> T {
        match self.indices.binary_search(&i) {
            Ok(p) => self.values[p],
            Err(_) => T::zero(),
        }
    }

    pub fn dot_dense(&self, w: &[T]) -> T {
        self.iter().map(|(i, v)| v * w[i]).sum()
    }

    pub fn dot(&self, other: &Self) -> T {
        let (mut a, mut b) = (0, 0);
        let mut acc = T::zero();
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc = acc + self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    pub fn squared_norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }

    pub fn norm(&self) -> T {
        self.squared_norm().sqrt()
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn map_values<F: Fn(usize, T) -> T>(&self, f: F) -> Self {
        let mut out = Self {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.iter().map(|(i, v)| f(i, v)).collect(),
        };
        out.drop_zeros();
        out
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map_values(|_, v| v * s)
    }

    /// Column-wise concatenation: `other` occupies columns after `self`.
    pub fn concat(&self, other: &Self) -> Self {
        let mut indices = self.indices.clone();
        indices.extend(other.indices.iter().map(|i| i + self.dim));
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self {
            dim: self.dim + other.dim,
            indices,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.dim];
        for (i, v) in self.iter() {
            d[i] = v;
        }
        d
    }

    /// Precision conversion between scalar types.
    pub fn cast<U: Scalar>(&self) -> SparseVector<U> {
        SparseVector {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}
