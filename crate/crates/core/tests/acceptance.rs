//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so every line is printed even when all
//! criteria pass; the process exits non-zero if any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use tng_core::cluster::{matched_budget_compare_with, run_experiment, RunOutput, Winner};
use tng_core::codecs::{ternary_optimality_check, ternary_variance, Codec};
use tng_core::config::ExperimentConfig;
use tng_core::optim::{snapshot_refresh, svrg_gradient, LbfgsMemory, StepSchedule, SvrgState};
use tng_core::problems::{gen_synthetic, LogRegProblem, Problem, Surface};
use tng_core::rng::{derive_stream, gaussian, Purpose, RngStream};
use tng_core::trace::{rows_from_logs, write_trace};
use tng_core::DenseVector;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Seed for every random draw in this file that is not a simulated run.
const SUITE_SEED: u64 = 0x7e57;

fn stream(tag: u64, index: u64) -> RngStream {
    derive_stream(SUITE_SEED, tag, index, Purpose::Diagnostics)
}

/// Gaussian entries with per-coordinate magnitudes spread over two decades,
/// so vectors have both dominant and tiny coordinates.
fn random_vector(s: &mut RngStream, d: usize) -> DenseVector {
    let values = (0..d)
        .map(|_| s.standard_normal() * 10f64.powf(2.0 * s.uniform() - 1.0))
        .collect();
    DenseVector::new(values).unwrap()
}

// ---------------------------------------------------------------- 1 and 2

const CODEC_DIM: usize = 32;
const CODEC_VECTORS: u64 = 20;
const CODEC_TRIALS: usize = 100_000;

fn codecs_under_test() -> [Codec; 3] {
    [Codec::Ternary, Codec::Quant { levels: 4 }, Codec::Sparse { k: 8.0 }]
}

/// Per-component sample mean and standard error of `decode(encode(v))`, plus
/// the mean squared coding error.
struct CodecMoments {
    mean: Vec<f64>,
    std_err: Vec<f64>,
    mse: f64,
}

fn codec_moments(codec: Codec, v: &DenseVector, s: &mut RngStream) -> CodecMoments {
    let d = v.len();
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut err_sum = 0.0;
    for _ in 0..CODEC_TRIALS {
        let out = codec.encode(v, s).unwrap().decode();
        let mut err = 0.0;
        for (i, (&x, &target)) in out.iter().zip(v.iter()).enumerate() {
            // Centering on the target keeps the variance sum well-conditioned.
            let dev = x - target;
            sum[i] += dev;
            sum_sq[i] += dev * dev;
            err += dev * dev;
        }
        err_sum += err;
    }
    let n = CODEC_TRIALS as f64;
    let mut mean = Vec::with_capacity(d);
    let mut std_err = Vec::with_capacity(d);
    for i in 0..d {
        let m = sum[i] / n;
        let var = (sum_sq[i] / n - m * m).max(0.0) * n / (n - 1.0);
        mean.push(v.as_slice()[i] + m);
        std_err.push((var / n).sqrt());
    }
    CodecMoments {
        mean,
        std_err,
        mse: err_sum / n,
    }
}

fn codec_vectors() -> Vec<DenseVector> {
    (0..CODEC_VECTORS)
        .map(|i| random_vector(&mut stream(1, i), CODEC_DIM))
        .collect()
}

fn criterion_1_unbiasedness() -> Outcome {
    // 20 vectors × 32 components × 3 codecs = 1920 two-sided 3-SE checks. Even
    // an exactly unbiased codec misses ~0.27% of them, so the gate allows the
    // binomial count expected by chance plus four standard deviations.
    // Components with zero spread must match exactly.
    let vectors = codec_vectors();
    let mut outside = 0usize;
    let mut exact_mismatch = 0usize;
    let mut checks = 0usize;
    let mut worst: f64 = 0.0;
    for codec in codecs_under_test() {
        for (i, v) in vectors.iter().enumerate() {
            let m = codec_moments(codec, v, &mut stream(2, i as u64));
            for ((&mean, &se), &target) in m.mean.iter().zip(&m.std_err).zip(v.iter()) {
                checks += 1;
                if se == 0.0 {
                    exact_mismatch += usize::from((mean - target).abs() > 1e-12 * target.abs().max(1.0));
                    continue;
                }
                let z = (mean - target).abs() / se;
                worst = worst.max(z);
                outside += usize::from(z > 3.0);
            }
        }
    }
    let p_outside = 0.0027;
    let expected = p_outside * checks as f64;
    let allowed = (expected + 4.0 * (expected * (1.0 - p_outside)).sqrt()).ceil() as usize;
    Outcome::new(
        outside <= allowed && exact_mismatch == 0,
        format!(
            "{outside}/{checks} components beyond 3 SE (chance allows {allowed}), max |z| = {worst:.2}, \
             {exact_mismatch} deterministic mismatches"
        ),
    )
}

fn criterion_2_ternary_variance() -> Outcome {
    let mut worst: f64 = 0.0;
    for (i, v) in codec_vectors().iter().enumerate() {
        let m = codec_moments(Codec::Ternary, v, &mut stream(2, i as u64));
        let predicted = ternary_variance(v);
        let closed_form = v.inf_norm() * v.l1_norm() - v.l2_norm_sq();
        assert!((predicted - closed_form).abs() <= 1e-12 * closed_form.max(1.0));
        worst = worst.max((m.mse - predicted).abs() / predicted);
    }
    Outcome::new(
        worst <= 0.02,
        format!(
            "max relative gap between Monte Carlo E‖Q[v]−v‖² and R‖v‖₁−‖v‖² is {:.3}% (limit 2%)",
            worst * 100.0
        ),
    )
}

// ---------------------------------------------------------------- 3

fn criterion_3_ternary_optimal_scale() -> Outcome {
    let mut passed = 0;
    for i in 0..100 {
        let mut s = stream(3, i);
        let d = 1 + s.index(64);
        let v = random_vector(&mut s, d);
        let r = v.inf_norm();
        let mut grid: Vec<f64> = (0..7).map(|_| r * (1.0 + 4.0 * s.uniform())).collect();
        grid.push(r);
        passed += usize::from(ternary_optimality_check(&v, &grid).unwrap());
    }
    Outcome::new(
        passed == 100,
        format!("{passed}/100 vectors: R = ‖v‖∞ minimizes the variance over an 8-point grid"),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4_benchmark_surfaces() -> Outcome {
    let mut worst_value: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    for surface in [Surface::Ackley, Surface::Booth, Surface::Rosenbrock] {
        let (x, y) = surface.minimizer();
        worst_value = worst_value.max(surface.eval(x, y).abs());
        let (gx, gy) = surface.grad(x, y);
        worst_grad = worst_grad.max(gx.hypot(gy));
        let mut s = stream(4, surface as u64);
        for _ in 0..100 {
            let (x, y) = (4.0 * s.uniform() - 2.0, 4.0 * s.uniform() - 2.0);
            let h = 1e-6;
            let fd_x = (surface.eval(x + h, y) - surface.eval(x - h, y)) / (2.0 * h);
            let fd_y = (surface.eval(x, y + h) - surface.eval(x, y - h)) / (2.0 * h);
            let (gx, gy) = surface.grad(x, y);
            let err = ((gx - fd_x).abs() / gx.abs().max(1.0)).max((gy - fd_y).abs() / gy.abs().max(1.0));
            worst_fd = worst_fd.max(err);
        }
    }
    Outcome::new(
        worst_value <= 1e-12 && worst_grad <= 1e-8 && worst_fd <= 1e-5,
        format!(
            "max |f(x⋆)| = {worst_value:.1e} (≤1e-12), max ‖∇f(x⋆)‖ = {worst_grad:.1e} (≤1e-8), \
             max finite-difference error = {worst_fd:.1e} (≤1e-5, relative to max(1, |g|))"
        ),
    )
}

// ---------------------------------------------------------------- 5

type Matrix = Vec<Vec<f64>>;

fn mat_vec(a: &Matrix, x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Dense inverse-Hessian recursion H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ from
/// H₀ = γI, γ = sᵀy/yᵀy of the newest pair, oldest pair first.
fn dense_bfgs_inverse(pairs: &[(Vec<f64>, Vec<f64>)]) -> Matrix {
    let d = pairs[0].0.len();
    let (s_new, y_new) = pairs.last().unwrap();
    let gamma = dot(s_new, y_new) / dot(y_new, y_new);
    let mut h: Matrix = (0..d)
        .map(|i| (0..d).map(|j| if i == j { gamma } else { 0.0 }).collect())
        .collect();
    for (s, y) in pairs {
        let rho = 1.0 / dot(y, s);
        let left: Matrix = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| f64::from(u8::from(i == j)) - rho * s[i] * y[j])
                    .collect()
            })
            .collect();
        let lh: Matrix = (0..d)
            .map(|i| (0..d).map(|j| (0..d).map(|k| left[i][k] * h[k][j]).sum()).collect())
            .collect();
        // (I − ρysᵀ) is the transpose of `left`.
        h = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| (0..d).map(|k| lh[i][k] * left[j][k]).sum::<f64>() + rho * s[i] * s[j])
                    .collect()
            })
            .collect();
    }
    h
}

fn criterion_5_lbfgs() -> Outcome {
    const D: usize = 5;
    const K: usize = 3;
    let mut worst_oracle: f64 = 0.0;
    let mut worst_secant: f64 = 0.0;
    for i in 0..50 {
        let mut s = stream(5, i);
        // SPD curvature A = BᵀB + I/2 guarantees sᵀy > 0.
        let b: Matrix = (0..D).map(|_| (0..D).map(|_| s.standard_normal()).collect()).collect();
        let a: Matrix = (0..D)
            .map(|r| {
                (0..D)
                    .map(|c| (0..D).map(|k| b[k][r] * b[k][c]).sum::<f64>() + if r == c { 0.5 } else { 0.0 })
                    .collect()
            })
            .collect();
        let mut memory = LbfgsMemory::new(K).unwrap();
        let mut pairs = Vec::new();
        for _ in 0..K {
            let sv: Vec<f64> = (0..D).map(|_| s.standard_normal()).collect();
            let yv = mat_vec(&a, &sv);
            memory
                .push(
                    DenseVector::new(sv.clone()).unwrap(),
                    DenseVector::new(yv.clone()).unwrap(),
                )
                .unwrap();
            pairs.push((sv, yv));
        }
        let h = dense_bfgs_inverse(&pairs);
        let g: Vec<f64> = (0..D).map(|_| s.standard_normal()).collect();
        let two_loop = memory.apply(&DenseVector::new(g.clone()).unwrap()).unwrap();
        let oracle = mat_vec(&h, &g);
        let scale = oracle.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for (p, q) in two_loop.iter().zip(&oracle) {
            worst_oracle = worst_oracle.max((p - q).abs() / scale);
        }
        let (s_new, y_new) = pairs.last().unwrap();
        let hy = memory.apply(&DenseVector::new(y_new.clone()).unwrap()).unwrap();
        let scale = s_new.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for (p, q) in hy.iter().zip(s_new) {
            worst_secant = worst_secant.max((p - q).abs() / scale);
        }
    }
    Outcome::new(
        worst_oracle <= 1e-10 && worst_secant <= 1e-10,
        format!(
            "two-loop vs dense oracle max error {worst_oracle:.1e}, secant H·y = s max error {worst_secant:.1e} \
             (both ≤1e-10, relative to max(1, ‖·‖∞))"
        ),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_6_svrg_identity() -> Outcome {
    let ds = Arc::new(gen_synthetic(64, 16, 0.25, 0.6, 6).unwrap());
    let problem = Problem::LogReg(LogRegProblem::new(ds, 0.01).unwrap());
    let mut s = stream(6, 0);
    let snapshot_w = gaussian(&mut s, 16).unwrap();
    let w = gaussian(&mut s, 16).unwrap();
    let mut state = SvrgState::new(8).unwrap();
    snapshot_refresh(&problem, &mut state, &snapshot_w).unwrap();
    let mut avg = DenseVector::zeros(16);
    for n in 0..64 {
        avg.add_scaled(1.0 / 64.0, &svrg_gradient(&problem, &[n], &w, &state).unwrap())
            .unwrap();
    }
    let err = avg.sub(&problem.full_grad(&w).unwrap()).unwrap().inf_norm();
    Outcome::new(
        err <= 1e-12,
        format!("max |mean_n svrg_gradient − ∇F| = {err:.1e} (≤1e-12)"),
    )
}

// ---------------------------------------------------------------- 7

/// Eight workers: at 1e5 bits the run is still in the transient where the
/// mean gradient dominates the N(0, 1) noise, which is the regime in which a
/// trajectory reference can shrink the coding error. With one or two workers
/// the same budget buys enough rounds to reach the noise floor, where the
/// stale reference no longer helps.
fn booth_config(strategy: &str) -> ExperimentConfig {
    ExperimentConfig::from_json_str(&format!(
        r#"{{
            "problem": {{ "type": "booth" }},
            "cluster": {{ "workers": 8 }},
            "optimizer": {{ "type": "sgd", "step": {{ "policy": "constant", "eta": 0.0001 }} }},
            "codec": {{ "type": "ternary" }},
            "normalization": {{ "mode": "subtract", "strategy": "{strategy}", "update_period": 16 }},
            "budget": {{ "max_bits": 100000 }}
        }}"#
    ))
    .unwrap()
}

fn criterion_7_booth_matched_bits() -> Outcome {
    let tng = booth_config("last_round_average");
    let plain = booth_config("zero");
    let seeds: Vec<u64> = (1..=20).collect();
    let problem = tng.problem.build().unwrap();
    let report = matched_budget_compare_with(&tng, &plain, problem, 100_000, &seeds).unwrap();
    let wins = report.wins(Winner::A);
    Outcome::new(
        wins >= 14,
        format!(
            "TNG wins {wins}/20 seeds at 1e5 bits (need ≥14); median suboptimality TNG {:.3e} vs ternary {:.3e}",
            report.median_a, report.median_b
        ),
    )
}

// ---------------------------------------------------------------- 8

const LOGREG_BUDGET: u64 = 300_000;

fn logreg_config(c_sk: f64, codec: &str, normalization: &str, eta: f64) -> ExperimentConfig {
    ExperimentConfig::from_json_str(&format!(
        r#"{{
            "problem": {{ "type": "logreg", "n": 512, "d": 64, "c_sk": {c_sk}, "c_th": 0.6,
                          "lambda2": 0.01, "data_seed": 1 }},
            "cluster": {{ "workers": 4, "batch_size": 8 }},
            "optimizer": {{ "type": "sgd", "step": {{ "policy": "constant", "eta": {eta} }} }},
            "codec": {codec},
            "normalization": {normalization},
            "budget": {{ "max_bits": {LOGREG_BUDGET} }}
        }}"#
    ))
    .unwrap()
}

fn criterion_8_logreg_grid() -> Outcome {
    // Step sizes were tuned per method and cell on a {0.05, 0.1, …, 3.2}
    // grid; the baseline and the TN variant ended up on the same values.
    const TN: &str = r#"{ "mode": "subtract", "strategy": "pool_search", "tau_max": 8, "update_period": 128 }"#;
    const BASELINE: &str = r#"{ "strategy": "zero" }"#;
    let cells: [(f64, &str, f64); 6] = [
        (1.0, r#"{ "type": "ternary" }"#, 0.2),
        (1.0, r#"{ "type": "quant", "s": 2 }"#, 0.2),
        (1.0, r#"{ "type": "sparse", "k": 8 }"#, 0.2),
        (0.0625, r#"{ "type": "ternary" }"#, 0.05),
        (0.0625, r#"{ "type": "quant", "s": 2 }"#, 0.1),
        (0.0625, r#"{ "type": "sparse", "k": 8 }"#, 0.1),
    ];
    let seeds: Vec<u64> = (1..=10).collect();
    let mut problems: Vec<(f64, Arc<Problem>)> = Vec::new();
    let mut won = 0;
    let mut cell_notes = Vec::new();
    for (c_sk, codec, eta) in cells {
        let tn = logreg_config(c_sk, codec, TN, eta);
        let base = logreg_config(c_sk, codec, BASELINE, eta);
        let problem = match problems.iter().find(|(c, _)| *c == c_sk) {
            Some((_, p)) => Arc::clone(p),
            None => {
                let p = tn.problem.build().unwrap();
                problems.push((c_sk, Arc::clone(&p)));
                p
            }
        };
        let report = matched_budget_compare_with(&tn, &base, problem, LOGREG_BUDGET, &seeds).unwrap();
        let ok = report.median_a <= report.median_b;
        won += usize::from(ok);
        cell_notes.push(format!(
            "{}/C_sk={c_sk}: {:.2e} vs {:.2e}{}",
            tn.codec.codec().name(),
            report.median_a,
            report.median_b,
            if ok { "" } else { " ✗" }
        ));
    }
    Outcome::new(
        won >= 5,
        format!(
            "TN median ≤ baseline in {won}/6 cells at {LOGREG_BUDGET} bits (need ≥5): {}",
            cell_notes.join("; ")
        ),
    )
}

// ---------------------------------------------------------------- 9

fn criterion_9_gradient_variance_bound() -> Outcome {
    const BATCH: usize = 8;
    const DRAWS: u64 = 4000;
    let ds = Arc::new(gen_synthetic(512, 64, 1.0, 0.6, 1).unwrap());
    let lr = LogRegProblem::new(Arc::clone(&ds), 0.01).unwrap();
    // Each f_n is (‖a_n‖²/4 + λ₂)-smooth; the bound needs the worst of them.
    let l_max = (0..ds.n)
        .map(|n| ds.row(n).iter().map(|x| x * x).sum::<f64>() / 4.0)
        .fold(0.0, f64::max)
        + lr.lambda2;
    let (w_star, f_star) = lr.optimum().unwrap().clone();
    let problem = Problem::LogReg(lr);
    let all: Vec<usize> = (0..ds.n).collect();

    // Mean and standard error of ‖g(w)‖² over independent batches.
    let second_moment = |w: &DenseVector, tag: u64| {
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for t in 0..DRAWS {
            let batch = problem.sample_batch(&all, BATCH, &mut derive_stream(SUITE_SEED, tag, t, Purpose::Batch));
            let g2 = problem.batch_grad(w, &batch).unwrap().l2_norm_sq();
            sum += g2;
            sum_sq += g2 * g2;
        }
        let n = DRAWS as f64;
        let mean = sum / n;
        (mean, ((sum_sq / n - mean * mean).max(0.0) / (n - 1.0)).sqrt())
    };

    let (sigma_sq, sigma_se) = second_moment(&w_star, 900);
    let mut held = 0;
    let mut tightest = f64::INFINITY;
    for i in 0..20u64 {
        let mut s = stream(9, i);
        let radius = 10f64.powf(-1.0 + 2.0 * i as f64 / 19.0);
        let mut w = w_star.clone();
        w.add_scaled(radius / 8.0, &gaussian(&mut s, 64).unwrap()).unwrap();
        let subopt = problem.objective(&w).unwrap() - f_star;
        let (m, se) = second_moment(&w, 1000 + i);
        let bound = 4.0 * l_max * subopt + 2.0 * sigma_sq;
        let slack = 3.0 * (se + 2.0 * sigma_se);
        held += usize::from(m <= bound + slack);
        tightest = tightest.min(bound / m);
    }
    Outcome::new(
        held == 20,
        format!(
            "E‖g(w)‖² ≤ 4L(F(w)−F⋆) + 2σ̂² (3-SE slack) at {held}/20 random points; \
             L = {l_max:.3}, σ̂² = {sigma_sq:.3e}, smallest bound/moment ratio {tightest:.2}"
        ),
    )
}

// ---------------------------------------------------------------- 10

fn trace_bytes(run: &RunOutput, label: &str) -> Vec<u8> {
    let mut out = Vec::new();
    write_trace(&mut out, &rows_from_logs(label, &run.logs)).unwrap();
    out
}

fn criterion_10_determinism_and_ledger() -> Outcome {
    let config = logreg_config(
        0.25,
        r#"{ "type": "ternary" }"#,
        r#"{ "mode": "subtract", "strategy": "averaged_past_compressed", "tau_max": 4, "update_period": 4 }"#,
        0.2,
    );
    let run_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_experiment(&config).unwrap())
    };
    let one = run_with(1);
    let eight = run_with(8);
    let identical = trace_bytes(&one, "r") == trace_bytes(&eight, "r");
    let last = one.logs.last().map_or(0, |l| l.cumulative_bits);
    let conserved = one.ledger.total() == last && eight.ledger.total() == last;
    Outcome::new(
        identical && conserved && !one.logs.is_empty(),
        format!(
            "{} rounds: trace.csv bytes identical under 1 and 8 threads: {identical}; \
             cumulative bits {last} = ledger sum {}: {conserved}",
            one.logs.len(),
            one.ledger.total()
        ),
    )
}

// ---------------------------------------------------------------- 11

/// Textbook SGD on Booth with the simulator's noise stream for worker 0.
fn reference_sgd(seed: u64, eta: f64, rounds: u64) -> (f64, f64) {
    let (mut x, mut y) = (0.0f64, 0.0f64);
    for t in 0..rounds {
        let (gx, gy) = Surface::Booth.grad(x, y);
        let mut noise = derive_stream(seed, 0, t, Purpose::Noise);
        let n = gaussian(&mut noise, 2).unwrap();
        x -= eta * (gx + n.as_slice()[0]);
        y -= eta * (gy + n.as_slice()[1]);
    }
    (x, y)
}

fn criterion_11_degenerate_equivalence() -> Outcome {
    let config = ExperimentConfig::from_json_str(
        r#"{
            "problem": { "type": "booth", "start": [0.0, 0.0] },
            "cluster": { "workers": 1 },
            "optimizer": { "type": "sgd", "step": { "policy": "constant", "eta": 0.01 } },
            "codec": { "type": "none" },
            "normalization": { "strategy": "zero" },
            "budget": { "max_rounds": 500 },
            "master_seed": 23
        }"#,
    )
    .unwrap();
    assert!(matches!(config.optimizer.step, StepSchedule::Constant { .. }));
    let run = run_experiment(&config).unwrap();
    let (x, y) = reference_sgd(23, 0.01, 500);
    let w = run.final_w.as_slice();
    let exact = w[0].to_bits() == x.to_bits() && w[1].to_bits() == y.to_bits();
    Outcome::new(
        exact,
        format!(
            "after 500 rounds simulator w = ({}, {}), reference loop ({x}, {y}); bitwise equal: {exact}",
            w[0], w[1]
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("codec unbiasedness", criterion_1_unbiasedness),
        ("ternary variance identity", criterion_2_ternary_variance),
        ("optimal ternary scale", criterion_3_ternary_optimal_scale),
        ("benchmark minima and gradients", criterion_4_benchmark_surfaces),
        ("L-BFGS two-loop correctness", criterion_5_lbfgs),
        ("SVRG gradient identity", criterion_6_svrg_identity),
        (
            "Booth: TNG beats ternary at matched bits",
            criterion_7_booth_matched_bits,
        ),
        ("logistic regression: TN variant vs baseline", criterion_8_logreg_grid),
        (
            "stochastic gradient second-moment bound",
            criterion_9_gradient_variance_bound,
        ),
        (
            "determinism and ledger conservation",
            criterion_10_determinism_and_ledger,
        ),
        (
            "degenerate equivalence with plain SGD",
            criterion_11_degenerate_equivalence,
        ),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict} {name} [{:.1}s]: {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
        if !outcome.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
    } else {
        println!("acceptance: {} of 11 criteria failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
