//! Dense real vectors used for decisions, gradients and error memories.

use std::ops::{Deref, DerefMut};

/// A `d`-dimensional real vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecisionVector(Vec<f64>);

impl DecisionVector {
    pub fn zeros(dim: usize) -> Self {
        DecisionVector(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        DecisionVector(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        debug_assert_eq!(self.0.len(), other.len());
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn dist_sq(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// `self += scale * other`
    pub fn axpy(&mut self, scale: f64, other: &[f64]) {
        debug_assert_eq!(self.0.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += scale * b;
        }
    }

    pub fn add_assign(&mut self, other: &[f64]) {
        self.axpy(1.0, other);
    }

    pub fn sub_assign(&mut self, other: &[f64]) {
        self.axpy(-1.0, other);
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.0 {
            *a *= factor;
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DecisionVector(self.0.iter().map(|a| a * factor).collect())
    }

    pub fn sub(&self, other: &[f64]) -> Self {
        DecisionVector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &[f64]) -> Self {
        DecisionVector(self.0.iter().zip(other).map(|(a, b)| a + b).collect())
    }

    pub fn set_zero(&mut self) {
        self.0.iter_mut().for_each(|a| *a = 0.0);
    }

    pub fn copy_from(&mut self, other: &[f64]) {
        self.0.copy_from_slice(other);
    }
}

impl Deref for DecisionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DecisionVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DecisionVector {
    fn from(v: Vec<f64>) -> Self {
        DecisionVector(v)
    }
}

impl From<&[f64]> for DecisionVector {
    fn from(v: &[f64]) -> Self {
        DecisionVector(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for DecisionVector {
    fn from(v: [f64; N]) -> Self {
        DecisionVector(v.to_vec())
    }
}

impl FromIterator<f64> for DecisionVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        DecisionVector(iter.into_iter().collect())
    }
}

/// Mean of a set of equally sized vectors.
pub fn mean_of<'a, I>(dim: usize, items: I) -> DecisionVector
where
    I: IntoIterator<Item = &'a DecisionVector>,
{
    let mut acc = DecisionVector::zeros(dim);
    let mut count = 0usize;
    for v in items {
        acc.add_assign(v);
        count += 1;
    }
    if count > 0 {
        acc.scale(1.0 / count as f64);
    }
    acc
}
