use crate::codecs::full_precision_bits;
use crate::error::{Error, Result};
use crate::normalization::Snapshot;
use crate::problems::Problem;
use crate::vecmath::DenseVector;

/// Snapshot bookkeeping for variance-reduced gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrgState {
    snapshot: Option<Snapshot>,
    epoch_len: usize,
    steps_in_epoch: usize,
}

impl SvrgState {
    pub fn new(epoch_len: usize) -> Result<Self> {
        if epoch_len == 0 {
            return Err(Error::config("optimizer.epoch_len", "must be at least 1"));
        }
        Ok(Self {
            snapshot: None,
            epoch_len,
            steps_in_epoch: 0,
        })
    }

    pub fn snapshot(&self) -> Option<&Snapshot> {
        self.snapshot.as_ref()
    }

    pub fn epoch_len(&self) -> usize {
        self.epoch_len
    }

    pub fn steps_in_epoch(&self) -> usize {
        self.steps_in_epoch
    }

    /// True before the first snapshot and at every epoch boundary.
    pub fn needs_refresh(&self) -> bool {
        self.snapshot.is_none() || self.steps_in_epoch == 0
    }

    /// Counts one optimizer step toward the epoch.
    pub fn advance(&mut self) {
        self.steps_in_epoch = (self.steps_in_epoch + 1) % self.epoch_len;
    }
}

fn require_finite_sum(problem: &Problem) -> Result<()> {
    if !problem.is_finite_sum() {
        return Err(Error::config(
            "optimizer.type",
            format!("svrg needs a finite-sum problem, not {}", problem.name()),
        ));
    }
    Ok(())
}

/// Sets `w̃ ← w`, recomputes `μ = ∇F(w̃)` exactly, and restarts the epoch.
/// Returns the bits of the full-precision broadcast of `w̃`.
pub fn snapshot_refresh(problem: &Problem, state: &mut SvrgState, w: &DenseVector) -> Result<u64> {
    require_finite_sum(problem)?;
    let full_grad = problem.full_grad(w)?;
    state.snapshot = Some(Snapshot {
        w: w.clone(),
        full_grad,
    });
    state.steps_in_epoch = 0;
    Ok(full_precision_bits(w.len()))
}

/// `∇f_B(w) − ∇f_B(w̃) + ∇F(w̃)` on the batch `indices`.
pub fn svrg_gradient(problem: &Problem, indices: &[usize], w: &DenseVector, state: &SvrgState) -> Result<DenseVector> {
    require_finite_sum(problem)?;
    let snap = state
        .snapshot
        .as_ref()
        .ok_or_else(|| Error::Inconsistent("svrg gradient requested before the first snapshot".into()))?;
    let mut g = problem.batch_grad(w, indices)?;
    g.add_scaled(-1.0, &problem.batch_grad(&snap.w, indices)?)?;
    g.add_scaled(1.0, &snap.full_grad)?;
    Ok(g)
}
