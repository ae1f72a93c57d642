use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::vecmath::DenseVector;

/// Relative curvature guard: a pair is kept only if `sᵀy > eps·‖s‖‖y‖`.
pub const DEFAULT_CURVATURE_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePair {
    pub s: DenseVector,
    pub y: DenseVector,
    /// `1 / sᵀy`
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushOutcome {
    Stored,
    /// The pair failed the curvature guard and was dropped.
    Skipped,
}

/// Bounded memory of `(s, y)` pairs for the limited-memory BFGS inverse
/// Hessian.
#[derive(Debug, Clone)]
pub struct LbfgsMemory {
    capacity: usize,
    curvature_eps: f64,
    pairs: VecDeque<CurvaturePair>,
    skipped: usize,
}

impl LbfgsMemory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("optimizer.memory", "must be at least 1"));
        }
        Ok(Self {
            capacity,
            curvature_eps: DEFAULT_CURVATURE_EPS,
            pairs: VecDeque::with_capacity(capacity),
            skipped: 0,
        })
    }

    pub fn with_curvature_eps(mut self, eps: f64) -> Self {
        self.curvature_eps = eps;
        self
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Oldest first.
    pub fn pairs(&self) -> impl DoubleEndedIterator<Item = &CurvaturePair> + ExactSizeIterator {
        self.pairs.iter()
    }

    /// Number of pairs rejected by the curvature guard so far.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn push(&mut self, s: DenseVector, y: DenseVector) -> Result<PushOutcome> {
        let sy = s.dot(&y)?;
        if !(sy > self.curvature_eps * s.l2_norm() * y.l2_norm()) {
            self.skipped += 1;
            return Ok(PushOutcome::Skipped);
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back(CurvaturePair { s, y, rho: 1.0 / sy });
        Ok(PushOutcome::Stored)
    }

    /// `H·g` by the two-loop recursion. The initial matrix is
    /// `(sᵀy / ‖y‖²)·I` from the newest pair, or the identity when empty.
    pub fn apply(&self, g: &DenseVector) -> Result<DenseVector> {
        let Some(newest) = self.pairs.back() else {
            return Ok(g.clone());
        };
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for pair in self.pairs.iter().rev() {
            let alpha = pair.rho * pair.s.dot(&q)?;
            q.add_scaled(-alpha, &pair.y)?;
            alphas.push(alpha);
        }
        let gamma = 1.0 / (newest.rho * newest.y.l2_norm_sq());
        let mut r = q.scale(gamma);
        for (pair, alpha) in self.pairs.iter().zip(alphas.iter().rev()) {
            let beta = pair.rho * pair.y.dot(&r)?;
            r.add_scaled(alpha - beta, &pair.s)?;
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn push_guard_and_eviction() {
        let mut m = LbfgsMemory::new(2).unwrap();
        assert_eq!(m.push(v(&[1.0, 0.0]), v(&[2.0, 0.0])).unwrap(), PushOutcome::Stored);
        assert_eq!(m.pairs().next().unwrap().rho, 0.5);
        assert_eq!(m.push(v(&[1.0, 0.0]), v(&[-1.0, 0.0])).unwrap(), PushOutcome::Skipped);
        assert_eq!(m.push(v(&[0.0, 0.0]), v(&[1.0, 0.0])).unwrap(), PushOutcome::Skipped);
        assert_eq!(m.skipped(), 2);
        m.push(v(&[0.0, 1.0]), v(&[0.0, 3.0])).unwrap();
        m.push(v(&[1.0, 1.0]), v(&[1.0, 2.0])).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.pairs().next().unwrap().s, v(&[0.0, 1.0]));
        assert!(LbfgsMemory::new(0).is_err());
    }

    #[test]
    fn empty_memory_is_identity() {
        let m = LbfgsMemory::new(3).unwrap();
        assert_eq!(m.apply(&v(&[3.0, -1.0])).unwrap(), v(&[3.0, -1.0]));
    }

    #[test]
    fn single_pair_scaled_identity() {
        let mut m = LbfgsMemory::new(3).unwrap();
        m.push(v(&[1.0, 0.0]), v(&[2.0, 0.0])).unwrap();
        assert_eq!(m.apply(&v(&[2.0, 0.0])).unwrap(), v(&[1.0, 0.0]));
        assert_eq!(m.apply(&v(&[0.0, 4.0])).unwrap(), v(&[0.0, 2.0]));
    }

    proptest! {
        #[test]
        fn positive_definite_direction(
            pairs in proptest::collection::vec(
                (proptest::collection::vec(-1.0f64..1.0, 4), proptest::collection::vec(-1.0f64..1.0, 4)),
                1..5,
            ),
            g in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            let mut m = LbfgsMemory::new(3).unwrap();
            for (s, y) in pairs {
                // y = s + small perturbation keeps most pairs above the guard.
                let s = v(&s);
                let y = s.add(&v(&y).scale(0.3)).unwrap();
                m.push(s, y).unwrap();
            }
            let g = v(&g);
            prop_assume!(g.l2_norm() > 1e-6);
            let p = m.apply(&g).unwrap();
            prop_assert!(g.dot(&p).unwrap() > 0.0);
        }
    }
}
