//! Reference vectors and gradient normalization.
//!
//! Before coding, each worker replaces its gradient `g` with a normalized
//! vector built from a reference `g̃` that the server can also reconstruct:
//!
//! * subtract: `r = Q[g − g̃]`, restored as `g̃ + r`
//! * quotient: `r = Q[g ./ g̃]`, restored as `g̃ ⊙ r`
//! * combined: `r = Q[(g − g̃) ./ g̃′]`, restored as `g̃′ ⊙ r + g̃`
//!
//! Divisions go through [`safe_quotient`], and restoration multiplies by the
//! same guarded denominator, so restore exactly inverts normalize up to
//! rounding.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::codecs::{ceil_log2, full_precision_bits, SCALAR_BITS};
use crate::error::{Error, Result};
use crate::vecmath::{guarded, safe_quotient, DenseVector, DEFAULT_QUOTIENT_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// `g̃ = 0`: plain compression.
    Zero,
    /// `g̃ = mean(g)·1`, one scalar per worker per round.
    MeanScalar,
    /// The round average from `τ_max` rounds ago.
    Delayed,
    /// Mean of the last `τ_max` round averages.
    AveragedPastCompressed,
    /// `∇f_B(w_t) − ∇f_B(w̃) + ∇F(w̃)` on the worker's own batch.
    SvrgComposite,
    /// Scalar correction of a first coding stage against the last average.
    TwoStage,
    /// The previous round's average `Σ_m v^m / M`.
    LastRoundAverage,
    /// `(w_{t−1} − w_t) / η`, inferred from parameters at no cost.
    ParamDiff,
    /// Best of `{0} ∪` the last `τ_max` broadcast averages, chosen per worker.
    PoolSearch,
}

impl ReferenceKind {
    /// Kinds parameterized by a history window `τ_max`.
    pub fn uses_window(self) -> bool {
        matches!(
            self,
            ReferenceKind::Delayed | ReferenceKind::AveragedPastCompressed | ReferenceKind::PoolSearch
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ReferenceKind::Zero => "zero",
            ReferenceKind::MeanScalar => "mean_scalar",
            ReferenceKind::Delayed => "delayed",
            ReferenceKind::AveragedPastCompressed => "averaged_past_compressed",
            ReferenceKind::SvrgComposite => "svrg_composite",
            ReferenceKind::TwoStage => "two_stage",
            ReferenceKind::LastRoundAverage => "last_round_average",
            ReferenceKind::ParamDiff => "param_diff",
            ReferenceKind::PoolSearch => "pool_search",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceStrategy {
    kind: ReferenceKind,
    tau_max: Option<usize>,
    update_period: usize,
}

impl ReferenceStrategy {
    /// `tau_max` must be given exactly for the windowed kinds.
    pub fn new(kind: ReferenceKind, tau_max: Option<usize>, update_period: usize) -> Result<Self> {
        match (kind.uses_window(), tau_max) {
            (true, None) => {
                return Err(Error::config(
                    "normalization.tau_max",
                    format!("required by strategy `{}`", kind.name()),
                ))
            }
            (false, Some(_)) => {
                return Err(Error::config(
                    "normalization.tau_max",
                    format!("not used by strategy `{}`", kind.name()),
                ))
            }
            (true, Some(0)) => return Err(Error::config("normalization.tau_max", "must be at least 1")),
            _ => {}
        }
        if update_period == 0 {
            return Err(Error::config("normalization.update_period", "must be at least 1"));
        }
        Ok(Self {
            kind,
            tau_max,
            update_period,
        })
    }

    pub fn zero() -> Self {
        Self {
            kind: ReferenceKind::Zero,
            tau_max: None,
            update_period: 1,
        }
    }

    pub fn kind(&self) -> ReferenceKind {
        self.kind
    }

    pub fn tau_max(&self) -> Option<usize> {
        self.tau_max
    }

    pub fn update_period(&self) -> usize {
        self.update_period
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizationMode {
    Subtract,
    Quotient { eps: f64 },
    Combined { eps: f64 },
}

impl NormalizationMode {
    pub fn quotient() -> Self {
        NormalizationMode::Quotient {
            eps: DEFAULT_QUOTIENT_EPS,
        }
    }

    pub fn combined() -> Self {
        NormalizationMode::Combined {
            eps: DEFAULT_QUOTIENT_EPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NormalizationMode::Quotient { eps } | NormalizationMode::Combined { eps } if !(eps > 0.0) => {
                Err(Error::config("normalization.eps", "must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// A materialized reference: `g̃` and, for the combined mode, `g̃′`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub primary: DenseVector,
    pub secondary: Option<DenseVector>,
}

impl Reference {
    pub fn new(primary: DenseVector) -> Self {
        Self {
            primary,
            secondary: None,
        }
    }

    pub fn with_secondary(primary: DenseVector, secondary: DenseVector) -> Self {
        Self {
            primary,
            secondary: Some(secondary),
        }
    }

    fn secondary(&self) -> Result<&DenseVector> {
        self.secondary
            .as_ref()
            .ok_or_else(|| Error::config("normalization.mode", "combined mode needs a second reference vector"))
    }
}

pub fn normalize(g: &DenseVector, reference: &Reference, mode: NormalizationMode) -> Result<DenseVector> {
    match mode {
        NormalizationMode::Subtract => g.sub(&reference.primary),
        NormalizationMode::Quotient { eps } => safe_quotient(g, &reference.primary, eps),
        NormalizationMode::Combined { eps } => {
            let secondary = reference.secondary()?;
            safe_quotient(&g.sub(&reference.primary)?, secondary, eps)
        }
    }
}

pub fn restore(decoded: &DenseVector, reference: &Reference, mode: NormalizationMode) -> Result<DenseVector> {
    match mode {
        NormalizationMode::Subtract => reference.primary.add(decoded),
        NormalizationMode::Quotient { eps } => guarded(&reference.primary, eps).elementwise_mul(decoded),
        NormalizationMode::Combined { eps } => {
            let secondary = reference.secondary()?;
            guarded(secondary, eps)
                .elementwise_mul(decoded)?
                .add(&reference.primary)
        }
    }
}

/// Index and copy of the pool entry closest to `g` in ℓ2; ties go to the
/// lowest index.
pub fn select_reference(g: &DenseVector, pool: &[DenseVector]) -> Result<(usize, DenseVector)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, candidate) in pool.iter().enumerate() {
        let dist = g.distance_sq(candidate)?;
        if best.is_none_or(|(_, b)| dist < b) {
            best = Some((i, dist));
        }
    }
    let (index, _) = best.ok_or_else(|| Error::Inconsistent("empty reference pool".into()))?;
    Ok((index, pool[index].clone()))
}

/// `Ĉ_nz = Σ‖g − g̃‖² / Σ‖g‖²`.
pub fn estimate_cnz(gs: &[DenseVector], refs: &[DenseVector]) -> Result<f64> {
    if gs.is_empty() || gs.len() != refs.len() {
        return Err(Error::Dimension {
            expected: gs.len().max(1),
            actual: refs.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (g, r) in gs.iter().zip(refs) {
        num += g.distance_sq(r)?;
        den += g.l2_norm_sq();
    }
    if den == 0.0 {
        return Err(Error::ZeroVector("all gradients are zero"));
    }
    Ok(num / den)
}

/// Shared anchor for SVRG-style references: `w̃` and `∇F(w̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub w: DenseVector,
    pub full_grad: DenseVector,
}

/// Worker-side inputs for [`ReferenceState::materialize`].
#[derive(Debug, Clone, Copy)]
pub struct RefContext<'a> {
    /// The gradient the worker is about to transmit.
    pub gradient: &'a DenseVector,
    /// `∇f_B(w_t)` on the worker's batch; needed by `SvrgComposite`.
    pub batch_grad: Option<&'a DenseVector>,
    /// `∇f_B(w̃)` on the same batch; needed by `SvrgComposite`.
    pub snapshot_batch_grad: Option<&'a DenseVector>,
    /// Decoded first-stage message and its cost; needed by `TwoStage`.
    pub stage_one: Option<(&'a DenseVector, u64)>,
}

impl<'a> RefContext<'a> {
    pub fn new(gradient: &'a DenseVector) -> Self {
        Self {
            gradient,
            batch_grad: None,
            snapshot_batch_grad: None,
            stage_one: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Materialized {
    pub vector: DenseVector,
    /// Extra uplink bits the worker spends to tell the server which `g̃` it used.
    pub uplink_bits: u64,
    pub pool_index: Option<usize>,
    /// True when the strategy lacked history and used the zero vector.
    pub fell_back: bool,
}

/// What the coordinator feeds back after a round.
#[derive(Debug, Clone, Copy)]
pub struct RoundOutputs<'a> {
    /// Server-side restored average `v_t`.
    pub average: &'a DenseVector,
    pub w_before: &'a DenseVector,
    pub w_after: &'a DenseVector,
    pub step_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RefreshOutcome {
    pub refreshed: bool,
    pub broadcast_bits: u64,
}

#[derive(Debug, Clone)]
pub struct ReferenceState {
    strategy: ReferenceStrategy,
    dim: usize,
    current: Option<DenseVector>,
    secondary: Option<DenseVector>,
    history: VecDeque<DenseVector>,
    pool: VecDeque<DenseVector>,
    snapshot: Option<Snapshot>,
    rounds_since_update: usize,
}

impl ReferenceState {
    pub fn new(strategy: ReferenceStrategy, dim: usize) -> Self {
        Self {
            strategy,
            dim,
            current: None,
            secondary: None,
            history: VecDeque::new(),
            pool: VecDeque::new(),
            snapshot: None,
            rounds_since_update: 0,
        }
    }

    pub fn strategy(&self) -> &ReferenceStrategy {
        &self.strategy
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The shared reference, or zeros before the first refresh.
    pub fn current(&self) -> DenseVector {
        self.current.clone().unwrap_or_else(|| DenseVector::zeros(self.dim))
    }

    pub fn history(&self) -> &VecDeque<DenseVector> {
        &self.history
    }

    pub fn snapshot(&self) -> Option<&Snapshot> {
        self.snapshot.as_ref()
    }

    pub fn set_snapshot(&mut self, snapshot: Snapshot) {
        self.snapshot = Some(snapshot);
    }

    /// Fixes `g̃′` for the combined mode instead of deriving it from `g̃`.
    pub fn set_secondary(&mut self, secondary: DenseVector) -> Result<()> {
        if secondary.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: secondary.len(),
            });
        }
        self.secondary = Some(secondary);
        Ok(())
    }

    pub fn rounds_since_update(&self) -> usize {
        self.rounds_since_update
    }

    /// True when the next [`update_state`](Self::update_state) will refresh.
    pub fn is_refresh_round(&self) -> bool {
        self.rounds_since_update == 0
    }

    fn window(&self) -> usize {
        self.strategy.tau_max.unwrap_or(1)
    }

    fn shared_or_zero(&self) -> (DenseVector, bool) {
        match &self.current {
            Some(c) => (c.clone(), false),
            None => (DenseVector::zeros(self.dim), true),
        }
    }

    /// Builds `g̃` (and `g̃′` when `mode` is combined) for one worker.
    pub fn reference_for(&self, ctx: &RefContext<'_>, mode: NormalizationMode) -> Result<(Reference, Materialized)> {
        let m = self.materialize(ctx)?;
        let secondary = match mode {
            NormalizationMode::Combined { eps } => Some(match &self.secondary {
                Some(s) => s.clone(),
                None => guarded(&m.vector, eps),
            }),
            _ => None,
        };
        Ok((
            Reference {
                primary: m.vector.clone(),
                secondary,
            },
            m,
        ))
    }

    pub fn materialize(&self, ctx: &RefContext<'_>) -> Result<Materialized> {
        let g = ctx.gradient;
        if g.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: g.len(),
            });
        }
        let plain = |vector, fell_back| Materialized {
            vector,
            uplink_bits: 0,
            pool_index: None,
            fell_back,
        };
        Ok(match self.strategy.kind {
            ReferenceKind::Zero => plain(DenseVector::zeros(self.dim), false),
            ReferenceKind::MeanScalar => Materialized {
                vector: DenseVector::filled(self.dim, g.mean_scalar()),
                uplink_bits: SCALAR_BITS,
                pool_index: None,
                fell_back: false,
            },
            ReferenceKind::Delayed
            | ReferenceKind::AveragedPastCompressed
            | ReferenceKind::LastRoundAverage
            | ReferenceKind::ParamDiff => {
                let (v, fell_back) = self.shared_or_zero();
                plain(v, fell_back)
            }
            ReferenceKind::SvrgComposite => match (&self.snapshot, ctx.snapshot_batch_grad) {
                (Some(snap), Some(at_snapshot)) => {
                    let at_w = ctx.batch_grad.unwrap_or(g);
                    let mut v = at_w.sub(at_snapshot)?;
                    v.add_scaled(1.0, &snap.full_grad)?;
                    plain(v, false)
                }
                (None, _) => plain(DenseVector::zeros(self.dim), true),
                (Some(_), None) => {
                    return Err(Error::Inconsistent(
                        "svrg_composite reference needs the batch gradient at the snapshot".into(),
                    ))
                }
            },
            ReferenceKind::TwoStage => {
                let (stage_one, stage_bits) = ctx
                    .stage_one
                    .ok_or_else(|| Error::Inconsistent("two_stage reference needs the first-stage message".into()))?;
                let (base, fell_back) = self.shared_or_zero();
                let mut first = base.add(stage_one)?;
                let residual = g.sub(&first)?;
                let correction = DenseVector::filled(self.dim, residual.mean_scalar());
                first.add_scaled(1.0, &correction)?;
                Materialized {
                    vector: first,
                    uplink_bits: stage_bits + SCALAR_BITS,
                    pool_index: None,
                    fell_back,
                }
            }
            ReferenceKind::PoolSearch => {
                let pool: Vec<DenseVector> = std::iter::once(DenseVector::zeros(self.dim))
                    .chain(self.pool.iter().cloned())
                    .collect();
                let (index, vector) = select_reference(g, &pool)?;
                Materialized {
                    vector,
                    uplink_bits: ceil_log2(pool.len() as u64),
                    pool_index: Some(index),
                    fell_back: self.pool.is_empty(),
                }
            }
        })
    }

    /// The first-stage reference for `TwoStage` (zeros before any refresh).
    pub fn stage_one_base(&self) -> DenseVector {
        self.current()
    }

    /// Records a finished round and, every `update_period` rounds, refreshes
    /// the shared reference.
    ///
    /// Refreshes happen after rounds `0, P, 2P, ...`. History-derived
    /// references are broadcast at full precision (16·D bits);
    /// `ParamDiff` is inferred by workers for free.
    pub fn update_state(&mut self, out: &RoundOutputs<'_>) -> Result<RefreshOutcome> {
        for v in [out.average, out.w_before, out.w_after] {
            if v.len() != self.dim {
                return Err(Error::Dimension {
                    expected: self.dim,
                    actual: v.len(),
                });
            }
        }
        self.history.push_back(out.average.clone());
        while self.history.len() > self.window() {
            self.history.pop_front();
        }

        let mut outcome = RefreshOutcome::default();
        if self.rounds_since_update == 0 {
            let broadcast = full_precision_bits(self.dim);
            match self.strategy.kind {
                ReferenceKind::Zero | ReferenceKind::MeanScalar | ReferenceKind::SvrgComposite => {}
                ReferenceKind::LastRoundAverage | ReferenceKind::TwoStage => {
                    self.current = Some(out.average.clone());
                    outcome = RefreshOutcome {
                        refreshed: true,
                        broadcast_bits: broadcast,
                    };
                }
                ReferenceKind::Delayed => {
                    self.current = self.history.front().cloned();
                    outcome = RefreshOutcome {
                        refreshed: true,
                        broadcast_bits: broadcast,
                    };
                }
                ReferenceKind::AveragedPastCompressed => {
                    let mut acc = DenseVector::zeros(self.dim);
                    for v in &self.history {
                        acc.add_scaled(1.0, v)?;
                    }
                    self.current = Some(acc.scale(1.0 / self.history.len() as f64));
                    outcome = RefreshOutcome {
                        refreshed: true,
                        broadcast_bits: broadcast,
                    };
                }
                ReferenceKind::ParamDiff => {
                    if !(out.step_size > 0.0) {
                        return Err(Error::Inconsistent("param_diff needs a positive step size".into()));
                    }
                    let diff = out.w_before.sub(out.w_after)?.scale(1.0 / out.step_size);
                    diff.check_finite()?;
                    self.current = Some(diff);
                    outcome = RefreshOutcome {
                        refreshed: true,
                        broadcast_bits: 0,
                    };
                }
                ReferenceKind::PoolSearch => {
                    self.pool.push_back(out.average.clone());
                    while self.pool.len() > self.window() {
                        self.pool.pop_front();
                    }
                    self.current = Some(out.average.clone());
                    outcome = RefreshOutcome {
                        refreshed: true,
                        broadcast_bits: broadcast,
                    };
                }
            }
        }
        self.rounds_since_update = (self.rounds_since_update + 1) % self.strategy.update_period;
        Ok(outcome)
    }
}
