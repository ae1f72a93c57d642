//! Objective and gradient oracles.

pub mod dataset_io;
pub mod logreg;
pub mod surfaces;

pub use logreg::{gen_synthetic, partition, LogRegProblem, Provenance, SyntheticDataset};
pub use surfaces::{Surface, SurfaceProblem};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vecmath::DenseVector;

/// Any problem the simulator can optimize.
#[derive(Debug)]
pub enum Problem {
    /// Two-dimensional surface; stochastic gradients are the analytic
    /// gradient plus N(0, 1) noise, and there is no finite sum.
    Surface(SurfaceProblem),
    /// Finite-sum logistic regression; stochastic gradients come from
    /// mini-batches.
    LogReg(LogRegProblem),
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Surface(p) => p.surface.name(),
            Problem::LogReg(_) => "logreg",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Problem::Surface(_) => 2,
            Problem::LogReg(p) => p.dim(),
        }
    }

    pub fn initial_point(&self) -> DenseVector {
        match self {
            Problem::Surface(p) => DenseVector::from_raw(vec![p.start.0, p.start.1]),
            Problem::LogReg(p) => DenseVector::zeros(p.dim()),
        }
    }

    pub fn is_finite_sum(&self) -> bool {
        matches!(self, Problem::LogReg(_))
    }

    pub fn logreg(&self) -> Option<&LogRegProblem> {
        match self {
            Problem::LogReg(p) => Some(p),
            Problem::Surface(_) => None,
        }
    }

    /// Samples available for sharding; surfaces have none.
    pub fn num_samples(&self) -> usize {
        match self {
            Problem::Surface(_) => 0,
            Problem::LogReg(p) => p.num_samples(),
        }
    }

    fn check_dim(&self, w: &DenseVector) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: w.len(),
            });
        }
        Ok(())
    }

    pub fn objective(&self, w: &DenseVector) -> Result<f64> {
        self.check_dim(w)?;
        match self {
            Problem::Surface(p) => Ok(p.objective(w)),
            Problem::LogReg(p) => p.full_loss(w),
        }
    }

    /// `F(w⋆)`: zero at the stated surface minima, solved for logistic
    /// regression.
    pub fn optimum_value(&self) -> Result<f64> {
        match self {
            Problem::Surface(_) => Ok(0.0),
            Problem::LogReg(p) => Ok(p.optimum()?.1),
        }
    }

    /// Exact gradient of the full objective.
    pub fn full_grad(&self, w: &DenseVector) -> Result<DenseVector> {
        self.check_dim(w)?;
        match self {
            Problem::Surface(p) => Ok(p.grad(w)),
            Problem::LogReg(p) => p.full_grad(w),
        }
    }

    /// Exact gradient on a batch; surfaces ignore the batch.
    pub fn batch_grad(&self, w: &DenseVector, batch: &[usize]) -> Result<DenseVector> {
        self.check_dim(w)?;
        match self {
            Problem::Surface(p) => Ok(p.grad(w)),
            Problem::LogReg(p) => p.grad(w, batch),
        }
    }

    /// Draws `batch_size` indices uniformly with replacement from `shard`.
    /// Surfaces have no samples and return an empty batch.
    pub fn sample_batch(&self, shard: &[usize], batch_size: usize, stream: &mut RngStream) -> Vec<usize> {
        match self {
            Problem::Surface(_) => Vec::new(),
            Problem::LogReg(_) => (0..batch_size).map(|_| shard[stream.index(shard.len())]).collect(),
        }
    }

    /// The stochastic gradient `g(w)` a worker computes: the batch gradient
    /// for logistic regression, the noisy analytic gradient for surfaces.
    pub fn stochastic_grad(&self, w: &DenseVector, batch: &[usize], noise: &mut RngStream) -> Result<DenseVector> {
        self.check_dim(w)?;
        match self {
            Problem::Surface(p) => p.noisy_grad(w, noise),
            Problem::LogReg(p) => p.grad(w, batch),
        }
    }
}
