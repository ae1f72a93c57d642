//! Dense real-vector arithmetic.
//!
//! Every reduction sums in index order, so repeated evaluation is
//! bit-identical on any platform with IEEE-754 doubles.

use std::ops::Index;

use crate::error::{Error, Result};

/// Default guard used by [`safe_quotient`] when no explicit epsilon is given.
pub const DEFAULT_QUOTIENT_EPS: f64 = 1e-12;

/// A fixed-length vector of finite doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    values: Vec<f64>,
}

impl DenseVector {
    /// Builds a vector, rejecting empty input and non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values })
    }

    /// Wraps computed values without re-validating them. Callers that can
    /// produce overflow check [`DenseVector::check_finite`] at their boundary.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Self { values }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "zero-dimensional vector");
        Self::from_raw(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        assert!(dim > 0, "zero-dimensional vector");
        Self::from_raw(vec![value; dim])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.values.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    fn check_dim(&self, other: &DenseVector) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &DenseVector, f: impl Fn(f64, f64) -> f64) -> Result<DenseVector> {
        self.check_dim(other)?;
        Ok(Self::from_raw(
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn dot(&self, other: &DenseVector) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc + a * b))
    }

    pub fn add(&self, other: &DenseVector) -> Result<DenseVector> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseVector) -> Result<DenseVector> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn elementwise_mul(&self, other: &DenseVector) -> Result<DenseVector> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, factor: f64) -> DenseVector {
        Self::from_raw(self.values.iter().map(|v| v * factor).collect())
    }

    /// `self += factor * other`
    pub fn add_scaled(&mut self, factor: f64, other: &DenseVector) -> Result<()> {
        self.check_dim(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc + v.abs())
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc + v * v)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// Arithmetic mean of the entries.
    pub fn mean_scalar(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc + v) / self.len() as f64
    }

    /// Squared Euclidean distance, summed in index order.
    pub fn distance_sq(&self, other: &DenseVector) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc + (a - b) * (a - b)))
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.values[index]
    }
}

impl<'a> IntoIterator for &'a DenseVector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;

    fn into_iter(self) -> Self::IntoIter {
        self.values.iter()
    }
}

/// Moves `b` away from zero so that `|guard(b)| >= eps`; zero maps to `+eps`.
pub fn guard(b: f64, eps: f64) -> f64 {
    if b.abs() >= eps {
        b
    } else if b < 0.0 {
        -eps
    } else {
        eps
    }
}

/// Element-wise `a / b` with denominators clipped away from zero by `eps`.
pub fn safe_quotient(a: &DenseVector, b: &DenseVector, eps: f64) -> Result<DenseVector> {
    if !(eps > 0.0) {
        return Err(Error::config("eps", "quotient guard must be positive"));
    }
    a.zip_with(b, |x, y| x / guard(y, eps))
}

/// Element-wise guarded copy of `b`, the multiplier that inverts [`safe_quotient`].
pub fn guarded(b: &DenseVector, eps: f64) -> DenseVector {
    DenseVector::from_raw(b.iter().map(|&y| guard(y, eps)).collect())
}
