use crate::cluster::RoundLog;
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::rng::{derive_stream, Purpose};
use crate::vecmath::DenseVector;

/// Constants for the second-moment bound `E‖v‖² ≤ C_qnz(2L·(F − F⋆) + σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaConstants {
    /// Smoothness `L`.
    pub smoothness: f64,
    /// Gradient variance `σ²` at the optimum.
    pub sigma_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub round: u64,
    /// Monte Carlo `E‖v_t‖²`.
    pub second_moment: f64,
    /// `Ĉ_q·Ĉ_nz + 1`.
    pub c_qnz_hat: f64,
    pub bound: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub checks: Vec<BoundCheck>,
}

impl VarianceReport {
    pub fn fraction_satisfied(&self) -> f64 {
        if self.checks.is_empty() {
            return 1.0;
        }
        self.checks.iter().filter(|c| c.satisfied).count() as f64 / self.checks.len() as f64
    }
}

/// Compares each round's resampled `E‖v_t‖²` with the bound. The bound holds
/// in expectation, so this is a report rather than an assertion.
///
/// Every log must carry diagnostics (see
/// [`World::with_diagnostics`](crate::cluster::World::with_diagnostics)) with
/// a known suboptimality.
pub fn variance_diagnostic(logs: &[RoundLog], constants: Option<&LemmaConstants>) -> Result<VarianceReport> {
    let constants = constants.ok_or_else(|| Error::config("constants", "smoothness and sigma_sq are required"))?;
    if !(constants.smoothness > 0.0) || !(constants.sigma_sq >= 0.0) {
        return Err(Error::config("constants", "need smoothness > 0 and sigma_sq ≥ 0"));
    }
    let checks = logs
        .iter()
        .map(|log| {
            let diag = log
                .diagnostics
                .as_ref()
                .ok_or_else(|| Error::Inconsistent(format!("round {} has no resampled diagnostics", log.round)))?;
            let subopt = diag
                .suboptimality
                .ok_or_else(|| Error::Inconsistent(format!("round {} has no known suboptimality", log.round)))?;
            // A zero codec input or zero gradients mean no coding error.
            let c_qnz_hat = diag.cq_hat.unwrap_or(0.0) * diag.cnz_hat.unwrap_or(0.0) + 1.0;
            let bound = c_qnz_hat * (2.0 * constants.smoothness * subopt + constants.sigma_sq);
            Ok(BoundCheck {
                round: log.round,
                second_moment: diag.v_norm_sq,
                c_qnz_hat,
                bound,
                satisfied: diag.v_norm_sq <= bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VarianceReport { checks })
}

/// Monte Carlo `E‖g(w)‖²` for one worker's stochastic gradient, with batches
/// drawn from all samples.
pub fn estimate_sigma_sq(
    problem: &Problem,
    w: &DenseVector,
    batch_size: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let all: Vec<usize> = (0..problem.num_samples()).collect();
    let mut total = 0.0;
    for t in 0..trials as u64 {
        let batch = problem.sample_batch(&all, batch_size, &mut derive_stream(seed, 0, t, Purpose::Batch));
        let g = problem.stochastic_grad(w, &batch, &mut derive_stream(seed, 0, t, Purpose::Noise))?;
        total += g.l2_norm_sq();
    }
    Ok(total / trials as f64)
}
