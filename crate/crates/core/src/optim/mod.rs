//! Parameter-update rules applied by the coordinator to restored gradients.

mod lbfgs;
mod sgd;
mod svrg;

pub use lbfgs::{CurvaturePair, LbfgsMemory, PushOutcome, DEFAULT_CURVATURE_EPS};
pub use sgd::{SgdState, StepSchedule};
pub use svrg::{snapshot_refresh, svrg_gradient, SvrgState};
