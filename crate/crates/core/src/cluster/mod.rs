//! Deterministic synchronous simulation of `M` workers and one server.
//!
//! Each round every worker samples a batch, forms its stochastic gradient,
//! normalizes it against the shared reference, encodes it, and uploads the
//! message. The server decodes and restores each message, averages in worker
//! order, steps the optimizer, and refreshes the reference. All randomness
//! comes from streams keyed by `(seed, worker, round, purpose)`, so the
//! trace does not depend on how workers are scheduled across threads.

mod diagnostics;
mod experiment;
mod ledger;

pub use diagnostics::{estimate_sigma_sq, variance_diagnostic, BoundCheck, LemmaConstants, VarianceReport};
pub use experiment::{
    matched_budget_compare, matched_budget_compare_with, run_experiment, run_experiment_with, run_world,
    suboptimality_at_budget, ComparisonReport, ComparisonRow, RunOutput, Winner,
};
pub use ledger::{BroadcastKind, CommLedger, Direction, LedgerEntry};

use std::sync::Arc;

use rayon::prelude::*;

use crate::codecs::{bit_cost, full_precision_bits, Codec, CompressedMessage};
use crate::config::{ExperimentConfig, OptimizerKind};
use crate::error::{Error, Result};
use crate::normalization::{
    normalize, restore, NormalizationMode, RefContext, Reference, ReferenceKind, ReferenceState, RoundOutputs,
};
use crate::optim::{snapshot_refresh, svrg_gradient, LbfgsMemory, SgdState, SvrgState};
use crate::problems::{partition, Problem};
use crate::rng::{derive_stream, mix_words, Purpose};
use crate::vecmath::DenseVector;

/// Per-round Monte Carlo estimates taken at the pre-step iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundDiagnostics {
    /// Mean of `‖v_t‖²` over the resamples.
    pub v_norm_sq: f64,
    pub cnz_hat: Option<f64>,
    pub cq_hat: Option<f64>,
    /// `F(w_t) − F(w⋆)` before the step.
    pub suboptimality: Option<f64>,
    pub resamples: usize,
}

/// One simulated round. Objective values refer to the iterate this round
/// produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundLog {
    pub round: u64,
    pub objective: f64,
    pub suboptimality: Option<f64>,
    /// `‖v_t‖` of the restored average.
    pub grad_norm: f64,
    /// `Σ‖g^m − g̃^m‖² / Σ‖g^m‖²` across workers; `None` if all gradients
    /// were zero.
    pub cnz_hat: Option<f64>,
    /// `Σ‖Q[r^m] − r^m‖² / Σ‖r^m‖²` for this round's messages.
    pub cq_hat: Option<f64>,
    pub uplink_bits: Vec<u64>,
    pub broadcast_bits: u64,
    pub cumulative_bits: u64,
    /// Some worker used a zero reference because history was missing.
    pub fell_back: bool,
    pub diagnostics: Option<RoundDiagnostics>,
}

impl RoundLog {
    pub fn uplink_bits_round(&self) -> u64 {
        self.uplink_bits.iter().sum()
    }

    pub fn round_bits(&self) -> u64 {
        self.uplink_bits_round() + self.broadcast_bits
    }
}

#[derive(Debug, Clone)]
enum Optimizer {
    Sgd(SgdState),
    Svrg(SgdState),
    Lbfgs {
        sgd: SgdState,
        memory: LbfgsMemory,
        /// `(w_{t−1}, v_{t−1})` for forming the next curvature pair.
        previous: Option<(DenseVector, DenseVector)>,
    },
}

impl Optimizer {
    fn sgd(&self) -> &SgdState {
        match self {
            Optimizer::Sgd(s) | Optimizer::Svrg(s) | Optimizer::Lbfgs { sgd: s, .. } => s,
        }
    }
}

struct WorkerOutput {
    gradient: DenseVector,
    reference: Reference,
    normalized: DenseVector,
    message: CompressedMessage,
    uplink_bits: u64,
    fell_back: bool,
}

struct Aggregate {
    average: DenseVector,
    cnz_hat: Option<f64>,
    cq_hat: Option<f64>,
}

/// Coordinator state of a simulated cluster.
#[derive(Debug, Clone)]
pub struct World {
    problem: Arc<Problem>,
    shards: Vec<Vec<usize>>,
    batch_size: usize,
    codec: Codec,
    mode: NormalizationMode,
    param_broadcast: bool,
    seed: u64,
    round: u64,
    optimizer: Optimizer,
    reference: ReferenceState,
    svrg: Option<SvrgState>,
    ledger: CommLedger,
    cumulative_bits: u64,
    f_star: Option<f64>,
    diagnostic_resamples: usize,
}

fn as_numeric(round: u64) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite { index } => Error::Numeric {
            round: round as usize,
            detail: format!("non-finite value at coordinate {index}"),
        },
        other => other,
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

impl World {
    /// Builds the initial state: `w_0` from the problem, zero reference,
    /// empty ledger.
    pub fn new(config: &ExperimentConfig, problem: Arc<Problem>) -> Result<Self> {
        config.validate()?;
        let workers = config.cluster.workers;
        let shards = if problem.is_finite_sum() {
            partition(problem.num_samples(), workers)?
        } else {
            vec![Vec::new(); workers]
        };
        let dim = problem.dim();
        let w0 = problem.initial_point();
        let sgd = SgdState::new(w0, config.optimizer.step)?;
        let optimizer = match config.optimizer.kind {
            OptimizerKind::Sgd => Optimizer::Sgd(sgd),
            OptimizerKind::Svrg => Optimizer::Svrg(sgd),
            OptimizerKind::Lbfgs => Optimizer::Lbfgs {
                sgd,
                memory: LbfgsMemory::new(config.optimizer.memory.unwrap_or(0))?,
                previous: None,
            },
        };
        let strategy = config.normalization.strategy()?;
        let needs_snapshot =
            config.optimizer.kind == OptimizerKind::Svrg || strategy.kind() == ReferenceKind::SvrgComposite;
        let svrg = if needs_snapshot {
            if !problem.is_finite_sum() {
                return Err(Error::config(
                    "optimizer.type",
                    "svrg snapshots need a finite-sum problem",
                ));
            }
            Some(SvrgState::new(config.optimizer.epoch_len.unwrap_or(0))?)
        } else {
            None
        };
        let f_star = match problem.as_ref() {
            Problem::LogReg(p) if p.lambda2 == 0.0 => None,
            other => Some(other.optimum_value()?),
        };
        Ok(Self {
            shards,
            batch_size: config.cluster.batch_size,
            codec: config.codec.codec(),
            mode: config.normalization.mode(),
            param_broadcast: config.cluster.param_broadcast,
            seed: config.master_seed,
            round: 0,
            optimizer,
            reference: ReferenceState::new(strategy, dim),
            svrg,
            ledger: CommLedger::new(),
            cumulative_bits: 0,
            f_star,
            diagnostic_resamples: 0,
            problem,
        })
    }

    /// Records Monte Carlo estimates over `resamples` independent replays of
    /// each round (0 disables).
    pub fn with_diagnostics(mut self, resamples: usize) -> Self {
        self.diagnostic_resamples = resamples;
        self
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn w(&self) -> &DenseVector {
        &self.optimizer.sgd().w
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn ledger(&self) -> &CommLedger {
        &self.ledger
    }

    pub fn cumulative_bits(&self) -> u64 {
        self.cumulative_bits
    }

    pub fn reference(&self) -> &ReferenceState {
        &self.reference
    }

    pub fn optimum_value(&self) -> Option<f64> {
        self.f_star
    }

    /// L-BFGS pairs rejected by the curvature guard so far.
    pub fn lbfgs_skipped(&self) -> Option<usize> {
        match &self.optimizer {
            Optimizer::Lbfgs { memory, .. } => Some(memory.skipped()),
            _ => None,
        }
    }

    fn worker_round(&self, seed: u64, m: usize, w: &DenseVector) -> Result<WorkerOutput> {
        let t = self.round;
        let worker = m as u64;
        let problem = self.problem.as_ref();
        let batch = problem.sample_batch(
            &self.shards[m],
            self.batch_size,
            &mut derive_stream(seed, worker, t, Purpose::Batch),
        );
        let gradient = match (&self.optimizer, &self.svrg) {
            (Optimizer::Svrg(_), Some(state)) => svrg_gradient(problem, &batch, w, state)?,
            _ => problem.stochastic_grad(w, &batch, &mut derive_stream(seed, worker, t, Purpose::Noise))?,
        };
        gradient.check_finite()?;

        let mut ctx = RefContext::new(&gradient);
        let batch_grad;
        let snapshot_batch_grad;
        if self.reference.strategy().kind() == ReferenceKind::SvrgComposite {
            if let Some(snap) = self.reference.snapshot() {
                batch_grad = problem.batch_grad(w, &batch)?;
                snapshot_batch_grad = problem.batch_grad(&snap.w, &batch)?;
                ctx.batch_grad = Some(&batch_grad);
                ctx.snapshot_batch_grad = Some(&snapshot_batch_grad);
            }
        }
        let stage_one;
        if self.reference.strategy().kind() == ReferenceKind::TwoStage {
            let residual = gradient.sub(&self.reference.stage_one_base())?;
            let first = self
                .codec
                .encode(&residual, &mut derive_stream(seed, worker, t, Purpose::StageOne))?;
            stage_one = (first.decode(), bit_cost(&first).bits);
            ctx.stage_one = Some((&stage_one.0, stage_one.1));
        }

        let (reference, materialized) = self.reference.reference_for(&ctx, self.mode)?;
        let normalized = normalize(&gradient, &reference, self.mode)?;
        normalized.check_finite()?;
        let message = self
            .codec
            .encode(&normalized, &mut derive_stream(seed, worker, t, Purpose::Codec))?;
        let uplink_bits = bit_cost(&message).bits + materialized.uplink_bits;
        Ok(WorkerOutput {
            gradient,
            reference,
            normalized,
            message,
            uplink_bits,
            fell_back: materialized.fell_back,
        })
    }

    /// Runs every worker for the current round. Results come back in worker
    /// order regardless of which thread ran them.
    fn run_workers(&self, seed: u64, w: &DenseVector) -> Result<Vec<WorkerOutput>> {
        let workers = self.shards.len();
        if workers == 1 {
            return Ok(vec![self.worker_round(seed, 0, w)?]);
        }
        (0..workers)
            .into_par_iter()
            .map(|m| self.worker_round(seed, m, w))
            .collect()
    }

    /// Server side: decode, restore, and average in worker order.
    fn aggregate(&self, outputs: &[WorkerOutput]) -> Result<Aggregate> {
        let dim = self.problem.dim();
        let mut sum = DenseVector::zeros(dim);
        let (mut nz_num, mut nz_den, mut q_num, mut q_den) = (0.0, 0.0, 0.0, 0.0);
        for out in outputs {
            let decoded = out.message.decode();
            sum.add_scaled(1.0, &restore(&decoded, &out.reference, self.mode)?)?;
            nz_num += out.gradient.distance_sq(&out.reference.primary)?;
            nz_den += out.gradient.l2_norm_sq();
            q_num += decoded.distance_sq(&out.normalized)?;
            q_den += out.normalized.l2_norm_sq();
        }
        let average = if outputs.len() == 1 {
            sum
        } else {
            sum.scale(1.0 / outputs.len() as f64)
        };
        average.check_finite()?;
        Ok(Aggregate {
            average,
            cnz_hat: ratio(nz_num, nz_den),
            cq_hat: ratio(q_num, q_den),
        })
    }

    fn diagnose(&self, w: &DenseVector) -> Result<RoundDiagnostics> {
        let r = self.diagnostic_resamples;
        let (mut v_sq, mut nz_num, mut nz_den, mut q_num, mut q_den) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..r {
            let seed = mix_words(&[self.seed, self.round, i as u64, Purpose::Diagnostics as u64]);
            let outputs = self.run_workers(seed, w)?;
            v_sq += self.aggregate(&outputs)?.average.l2_norm_sq();
            for out in &outputs {
                nz_num += out.gradient.distance_sq(&out.reference.primary)?;
                nz_den += out.gradient.l2_norm_sq();
                q_num += out.message.decode().distance_sq(&out.normalized)?;
                q_den += out.normalized.l2_norm_sq();
            }
        }
        let objective = self.problem.objective(w)?;
        Ok(RoundDiagnostics {
            v_norm_sq: v_sq / r as f64,
            cnz_hat: ratio(nz_num, nz_den),
            cq_hat: ratio(q_num, q_den),
            suboptimality: self.f_star.map(|f| objective - f),
            resamples: r,
        })
    }

    /// `w ← w − η·direction`, where the direction is `v_t` for SGD/SVRG and
    /// `H_t·v_t` for L-BFGS. Returns the step size.
    fn step(&mut self, average: &DenseVector) -> Result<f64> {
        match &mut self.optimizer {
            Optimizer::Sgd(sgd) | Optimizer::Svrg(sgd) => sgd.step(average),
            Optimizer::Lbfgs { sgd, memory, previous } => {
                if let Some((w_prev, v_prev)) = previous.take() {
                    memory.push(sgd.w.sub(&w_prev)?, average.sub(&v_prev)?)?;
                }
                let direction = memory.apply(average)?;
                *previous = Some((sgd.w.clone(), average.clone()));
                sgd.step(&direction)
            }
        }
    }

    /// Executes one synchronous round and charges the ledger.
    pub fn run_round(&mut self) -> Result<RoundLog> {
        let t = self.round;
        let numeric = as_numeric(t);
        let mut broadcast_bits = 0;

        if let Some(state) = &mut self.svrg {
            if state.needs_refresh() {
                let w = self.optimizer.sgd().w.clone();
                let bits = snapshot_refresh(&self.problem, state, &w).map_err(&numeric)?;
                let snapshot = state.snapshot().expect("refreshed").clone();
                self.reference.set_snapshot(snapshot);
                self.ledger.broadcast(t, BroadcastKind::Snapshot, bits);
                broadcast_bits += bits;
            }
        }

        let w_before = self.w().clone();
        let outputs = self.run_workers(self.seed, &w_before).map_err(&numeric)?;
        let aggregate = self.aggregate(&outputs).map_err(&numeric)?;
        let diagnostics = if self.diagnostic_resamples > 0 {
            Some(self.diagnose(&w_before).map_err(&numeric)?)
        } else {
            None
        };

        let step_size = self.step(&aggregate.average).map_err(&numeric)?;
        if let Some(state) = &mut self.svrg {
            state.advance();
        }
        let w_after = self.w().clone();
        let refresh = self.reference.update_state(&RoundOutputs {
            average: &aggregate.average,
            w_before: &w_before,
            w_after: &w_after,
            step_size,
        })?;

        let uplink_bits: Vec<u64> = outputs.iter().map(|o| o.uplink_bits).collect();
        for (m, &bits) in uplink_bits.iter().enumerate() {
            self.ledger.uplink(t, m, bits);
        }
        if refresh.broadcast_bits > 0 {
            self.ledger
                .broadcast(t, BroadcastKind::Reference, refresh.broadcast_bits);
            broadcast_bits += refresh.broadcast_bits;
        }
        if self.param_broadcast {
            let bits = full_precision_bits(self.problem.dim());
            self.ledger.broadcast(t, BroadcastKind::Parameters, bits);
            broadcast_bits += bits;
        }

        let objective = self.problem.objective(&w_after)?;
        if !objective.is_finite() {
            return Err(Error::Numeric {
                round: t as usize,
                detail: "objective is not finite".into(),
            });
        }
        self.cumulative_bits += uplink_bits.iter().sum::<u64>() + broadcast_bits;
        self.round += 1;
        Ok(RoundLog {
            round: t,
            objective,
            suboptimality: self.f_star.map(|f| objective - f),
            grad_norm: aggregate.average.l2_norm(),
            cnz_hat: aggregate.cnz_hat,
            cq_hat: aggregate.cq_hat,
            uplink_bits,
            broadcast_bits,
            cumulative_bits: self.cumulative_bits,
            fell_back: outputs.iter().any(|o| o.fell_back),
            diagnostics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Surface, SurfaceProblem};

    fn booth_config(workers: usize, codec: &str, strategy: &str, period: usize) -> ExperimentConfig {
        ExperimentConfig::from_json_str(&format!(
            r#"{{
                "problem": {{ "type": "booth" }},
                "cluster": {{ "workers": {workers} }},
                "optimizer": {{ "type": "sgd", "step": {{ "policy": "constant", "eta": 0.01 }} }},
                "codec": {{ "type": "{codec}" }},
                "normalization": {{ "strategy": "{strategy}", "update_period": {period} }},
                "budget": {{ "max_rounds": 50 }},
                "master_seed": 5
            }}"#
        ))
        .unwrap()
    }

    fn booth() -> Arc<Problem> {
        Arc::new(Problem::Surface(SurfaceProblem::new(Surface::Booth)))
    }

    #[test]
    fn identity_codec_single_worker_is_plain_sgd() {
        let cfg = booth_config(1, "none", "zero", 1);
        let mut world = World::new(&cfg, booth()).unwrap();
        let mut w = DenseVector::new(vec![0.0, 0.0]).unwrap();
        let p = SurfaceProblem::new(Surface::Booth);
        for t in 0..50 {
            let g = p.noisy_grad(&w, &mut derive_stream(5, 0, t, Purpose::Noise)).unwrap();
            w.add_scaled(-0.01, &g).unwrap();
            let log = world.run_round().unwrap();
            assert_eq!(log.uplink_bits, vec![32]);
            assert_eq!(log.cumulative_bits, 32 * (t + 1));
        }
        assert_eq!(world.w(), &w);
    }

    #[test]
    fn ledger_matches_cumulative_bits() {
        let cfg = booth_config(3, "ternary", "last_round_average", 4);
        let mut world = World::new(&cfg, booth()).unwrap();
        let mut last = 0;
        for _ in 0..20 {
            let log = world.run_round().unwrap();
            assert_eq!(log.cumulative_bits, last + log.round_bits());
            last = log.cumulative_bits;
        }
        assert_eq!(world.ledger().total(), last);
        // refreshes after rounds 0, 4, 8, 12, 16, each 16·2 bits
        assert_eq!(world.ledger().total_by_direction(Direction::Broadcast), 5 * 32);
    }

    #[test]
    fn perfect_reference_sends_only_the_scale() {
        // Oracle reference g̃ = g: nothing left to code but the scale.
        let g = DenseVector::new(vec![3.0, -1.0]).unwrap();
        let r = normalize(&g, &Reference::new(g.clone()), NormalizationMode::Subtract).unwrap();
        let msg = Codec::Ternary.encode(&r, &mut derive_stream(0, 0, 0, 0)).unwrap();
        assert!(r.is_zero());
        assert_eq!(bit_cost(&msg).bits, 16);
    }

    #[test]
    fn thread_count_does_not_change_the_trace() {
        let cfg = booth_config(4, "ternary", "last_round_average", 2);
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let mut world = World::new(&cfg, booth()).unwrap();
                (0..30).map(|_| world.run_round().unwrap()).collect::<Vec<_>>()
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn divergence_is_a_numeric_error() {
        let mut cfg = booth_config(1, "ternary", "zero", 1);
        cfg.optimizer.step = crate::optim::StepSchedule::Constant { eta: 1e6 };
        let mut world = World::new(&cfg, booth()).unwrap();
        let err = (0..200).find_map(|_| world.run_round().err()).expect("diverges");
        assert!(matches!(err, Error::Numeric { .. }), "{err}");
    }
}
