use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecmath::DenseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSchedule {
    Constant {
        eta: f64,
    },
    /// `η_t = α / (λ (t + ακ))` with `κ = 2 L C_qnz / λ`.
    InverseT {
        alpha: f64,
        lambda: f64,
        smoothness: f64,
        c_qnz: f64,
    },
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Constant { eta } if !(eta > 0.0 && eta.is_finite()) => {
                Err(Error::config("optimizer.step.eta", "must be positive and finite"))
            }
            StepSchedule::InverseT {
                alpha,
                lambda,
                smoothness,
                c_qnz,
            } => {
                for (key, value) in [
                    ("optimizer.step.alpha", alpha),
                    ("optimizer.step.lambda", lambda),
                    ("optimizer.step.smoothness", smoothness),
                ] {
                    if !(value > 0.0 && value.is_finite()) {
                        return Err(Error::config(key, "must be positive and finite"));
                    }
                }
                // C_qnz = C_q·C_nz + 1, so anything below one is not a valid constant.
                if !(c_qnz >= 1.0 && c_qnz.is_finite()) {
                    return Err(Error::config("optimizer.step.c_qnz", "must be at least 1"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `κ = 2 L C_qnz / λ` for the inverse-t schedule.
    pub fn kappa(&self) -> Option<f64> {
        match *self {
            StepSchedule::InverseT {
                lambda,
                smoothness,
                c_qnz,
                ..
            } => Some(2.0 * smoothness * c_qnz / lambda),
            StepSchedule::Constant { .. } => None,
        }
    }

    pub fn step_size(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant { eta } => eta,
            StepSchedule::InverseT { alpha, lambda, .. } => {
                let kappa = self.kappa().unwrap();
                alpha / (lambda * (t as f64 + alpha * kappa))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    pub w: DenseVector,
    pub t: usize,
    pub schedule: StepSchedule,
}

impl SgdState {
    pub fn new(w: DenseVector, schedule: StepSchedule) -> Result<Self> {
        schedule.validate()?;
        Ok(Self { w, t: 0, schedule })
    }

    pub fn current_step_size(&self) -> f64 {
        self.schedule.step_size(self.t)
    }

    /// `w ← w − η_t·direction`, then `t ← t + 1`. Returns the step size used.
    ///
    /// A non-finite direction or result leaves the state untouched.
    pub fn step(&mut self, direction: &DenseVector) -> Result<f64> {
        if direction.len() != self.w.len() {
            return Err(Error::Dimension {
                expected: self.w.len(),
                actual: direction.len(),
            });
        }
        direction.check_finite()?;
        let eta = self.current_step_size();
        let mut next = self.w.clone();
        next.add_scaled(-eta, direction)?;
        next.check_finite()?;
        self.w = next;
        self.t += 1;
        Ok(eta)
    }
}
