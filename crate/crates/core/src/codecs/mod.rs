//! Unbiased lossy gradient codecs and their bit-cost model.
//!
//! Three compressors are provided: randomized ternary coding, stochastic
//! uniform quantization against the ℓ2 norm, and magnitude-proportional
//! sparsification. Each one satisfies `E[decode(encode(v))] = v`.
//!
//! Cost model (all counts in bits):
//!
//! | payload                      | bits                                        |
//! |------------------------------|---------------------------------------------|
//! | scalar (scale, mean, ...)    | 16                                          |
//! | ternary                      | 16 + min(2·D, nnz·(⌈log2 D⌉ + 1))           |
//! | quantized, `s` levels        | 16 + D·(1 + ⌈log2(s + 1)⌉)                  |
//! | sparse                       | 16·nnz + nnz·⌈log2 D⌉                       |
//! | full-precision vector        | 16·D                                        |
//!
//! With these constants one full-precision broadcast of a D-vector costs the
//! same as eight dense ternary payloads.

pub mod wire;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vecmath::DenseVector;

/// Bits charged for any transmitted scalar.
pub const SCALAR_BITS: u64 = 16;
/// Bits per element of a dense trit stream.
pub const DENSE_TRIT_BITS: u64 = 2;

/// `⌈log2 n⌉`, with `⌈log2 1⌉ = 0`.
pub fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

/// Cost of sending a D-vector at full (16-bit) precision.
pub fn full_precision_bits(dim: usize) -> u64 {
    SCALAR_BITS * dim as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct BitCost {
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TernaryMessage {
    scale: f64,
    trits: Vec<i8>,
}

impl TernaryMessage {
    pub fn new(scale: f64, trits: Vec<i8>) -> Result<Self> {
        if trits.is_empty() {
            return Err(Error::EmptyVector);
        }
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::decode("ternary scale must be finite and non-negative"));
        }
        if trits.iter().any(|t| !(-1..=1).contains(t)) {
            return Err(Error::decode("trit outside {-1, 0, 1}"));
        }
        if scale == 0.0 && trits.iter().any(|&t| t != 0) {
            return Err(Error::decode("zero scale with nonzero trits"));
        }
        Ok(Self { scale, trits })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn trits(&self) -> &[i8] {
        &self.trits
    }

    pub fn dim(&self) -> usize {
        self.trits.len()
    }

    pub fn nnz(&self) -> usize {
        self.trits.iter().filter(|&&t| t != 0).count()
    }
}

/// Stochastically quantized vector; `codes[d]` is a signed level in `-s..=s`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantMessage {
    scale: f64,
    levels: u32,
    codes: Vec<i32>,
}

impl QuantMessage {
    pub fn new(scale: f64, levels: u32, codes: Vec<i32>) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::EmptyVector);
        }
        if levels == 0 {
            return Err(Error::decode("quantizer needs at least one level"));
        }
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::decode("quantizer scale must be finite and non-negative"));
        }
        if codes.iter().any(|c| c.unsigned_abs() > levels) {
            return Err(Error::decode("quantization level out of range"));
        }
        if scale == 0.0 && codes.iter().any(|&c| c != 0) {
            return Err(Error::decode("zero scale with nonzero codes"));
        }
        Ok(Self { scale, levels, codes })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn codes(&self) -> &[i32] {
        &self.codes
    }

    pub fn dim(&self) -> usize {
        self.codes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMessage {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl SparseMessage {
    /// Entries must have strictly increasing indices below `dim` and nonzero
    /// finite values.
    pub fn new(dim: usize, entries: Vec<(u32, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        let mut prev: Option<u32> = None;
        for &(i, v) in &entries {
            if i as usize >= dim {
                return Err(Error::decode("sparse index out of range"));
            }
            if prev.is_some_and(|p| p >= i) {
                return Err(Error::decode("sparse indices must be strictly increasing"));
            }
            if !v.is_finite() || v == 0.0 {
                return Err(Error::decode("sparse values must be finite and nonzero"));
            }
            prev = Some(i);
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// Everything a worker can put on the wire.
#[derive(Debug, Clone, PartialEq)]
pub enum CompressedMessage {
    Ternary(TernaryMessage),
    Quant(QuantMessage),
    Sparse(SparseMessage),
    /// Uncompressed full-precision vector.
    Dense(DenseVector),
}

impl CompressedMessage {
    pub fn dim(&self) -> usize {
        match self {
            CompressedMessage::Ternary(m) => m.dim(),
            CompressedMessage::Quant(m) => m.dim(),
            CompressedMessage::Sparse(m) => m.dim(),
            CompressedMessage::Dense(v) => v.len(),
        }
    }

    pub fn decode(&self) -> DenseVector {
        match self {
            CompressedMessage::Ternary(m) => ternary_decode(m),
            CompressedMessage::Quant(m) => quant_decode(m),
            CompressedMessage::Sparse(m) => sparse_decode(m),
            CompressedMessage::Dense(v) => v.clone(),
        }
    }
}

pub fn bit_cost(msg: &CompressedMessage) -> BitCost {
    let dim = msg.dim() as u64;
    let bits = match msg {
        CompressedMessage::Ternary(m) => {
            let dense = DENSE_TRIT_BITS * dim;
            let sparse = m.nnz() as u64 * (ceil_log2(dim) + 1);
            SCALAR_BITS + dense.min(sparse)
        }
        CompressedMessage::Quant(m) => SCALAR_BITS + dim * (1 + ceil_log2(m.levels() as u64 + 1)),
        CompressedMessage::Sparse(m) => {
            let nnz = m.nnz() as u64;
            SCALAR_BITS * nnz + nnz * ceil_log2(dim)
        }
        CompressedMessage::Dense(_) => full_precision_bits(dim as usize),
    };
    BitCost { bits }
}

/// Randomized ternary coding: `scale = max|v_d|`, and coordinate `d` keeps its
/// sign with probability `|v_d| / scale`, otherwise it is zeroed.
///
/// One uniform is consumed per coordinate regardless of the outcome.
pub fn ternary_encode(v: &DenseVector, stream: &mut RngStream) -> TernaryMessage {
    let scale = v.inf_norm();
    if scale == 0.0 {
        return TernaryMessage {
            scale: 0.0,
            trits: vec![0; v.len()],
        };
    }
    let trits = v
        .iter()
        .map(|&x| {
            let u = stream.uniform();
            if u < x.abs() / scale {
                if x > 0.0 {
                    1
                } else {
                    -1
                }
            } else {
                0
            }
        })
        .collect();
    TernaryMessage { scale, trits }
}

pub fn ternary_decode(msg: &TernaryMessage) -> DenseVector {
    DenseVector::from_raw(msg.trits.iter().map(|&t| msg.scale * t as f64).collect())
}

/// Closed-form `E‖Q[v] − v‖² = R‖v‖₁ − ‖v‖₂²` with `R = ‖v‖_∞`.
pub fn ternary_variance(v: &DenseVector) -> f64 {
    ternary_variance_at(v, v.inf_norm())
}

fn ternary_variance_at(v: &DenseVector, r: f64) -> f64 {
    (r * v.l1_norm() - v.l2_norm_sq()).max(0.0)
}

/// Brute-force check that sampling with probability `|v_d| / R` at
/// `R = ‖v‖_∞` gives the smallest ternary variance among all feasible
/// scales in `r_grid`.
///
/// Returns true iff the variance `r‖v‖₁ − ‖v‖₂²` is nondecreasing over the
/// sorted grid and no grid point beats `R = ‖v‖_∞`.
pub fn ternary_optimality_check(v: &DenseVector, r_grid: &[f64]) -> Result<bool> {
    let r_min = v.inf_norm();
    let mut grid = r_grid.to_vec();
    for &r in &grid {
        if !(r >= r_min) {
            return Err(Error::InfeasibleGrid { value: r, min: r_min });
        }
    }
    grid.sort_by(f64::total_cmp);
    let at_min = ternary_variance_at(v, r_min);
    let variances: Vec<f64> = grid.iter().map(|&r| ternary_variance_at(v, r)).collect();
    let monotone = variances.windows(2).all(|w| w[0] <= w[1]);
    let minimal = variances.iter().all(|&var| at_min <= var);
    Ok(monotone && minimal)
}

/// Stochastic quantization with `levels` uniform levels against the ℓ2 norm.
pub fn quant_encode(v: &DenseVector, levels: u32, stream: &mut RngStream) -> Result<QuantMessage> {
    if levels == 0 {
        return Err(Error::config("codec.levels", "must be at least 1"));
    }
    let scale = v.l2_norm();
    if scale == 0.0 {
        return Ok(QuantMessage {
            scale: 0.0,
            levels,
            codes: vec![0; v.len()],
        });
    }
    let s = levels as f64;
    let codes = v
        .iter()
        .map(|&x| {
            let u = stream.uniform();
            let pos = x.abs() * s / scale;
            let lower = pos.floor();
            let level = if u < pos - lower { lower + 1.0 } else { lower };
            let level = (level as i64).min(levels as i64) as i32;
            if x < 0.0 {
                -level
            } else {
                level
            }
        })
        .collect();
    Ok(QuantMessage { scale, levels, codes })
}

pub fn quant_decode(msg: &QuantMessage) -> DenseVector {
    let s = msg.levels as f64;
    DenseVector::from_raw(msg.codes.iter().map(|&c| msg.scale * c as f64 / s).collect())
}

/// Keeps coordinate `d` with probability `p_d = min(1, k|v_d| / ‖v‖₁)` and
/// rescales kept values by `1 / p_d`.
pub fn sparse_encode(v: &DenseVector, k: f64, stream: &mut RngStream) -> Result<SparseMessage> {
    if !(k > 0.0 && k <= v.len() as f64) {
        return Err(Error::config(
            "codec.k",
            format!("sparsity budget {k} must lie in (0, {}]", v.len()),
        ));
    }
    let l1 = v.l1_norm();
    let mut entries = Vec::new();
    for (d, &x) in v.iter().enumerate() {
        let u = stream.uniform();
        if l1 == 0.0 {
            continue;
        }
        let p = (k * x.abs() / l1).min(1.0);
        if u < p {
            entries.push((d as u32, x / p));
        }
    }
    Ok(SparseMessage { dim: v.len(), entries })
}

pub fn sparse_decode(msg: &SparseMessage) -> DenseVector {
    let mut out = vec![0.0; msg.dim];
    for &(i, v) in &msg.entries {
        out[i as usize] = v;
    }
    DenseVector::from_raw(out)
}

/// Codec selection plus parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Codec {
    Ternary,
    Quant {
        levels: u32,
    },
    Sparse {
        k: f64,
    },
    /// Lossless pass-through; charged as a full-precision vector.
    Identity,
}

impl Codec {
    pub fn encode(&self, v: &DenseVector, stream: &mut RngStream) -> Result<CompressedMessage> {
        Ok(match *self {
            Codec::Ternary => CompressedMessage::Ternary(ternary_encode(v, stream)),
            Codec::Quant { levels } => CompressedMessage::Quant(quant_encode(v, levels, stream)?),
            Codec::Sparse { k } => CompressedMessage::Sparse(sparse_encode(v, k, stream)?),
            Codec::Identity => CompressedMessage::Dense(v.clone()),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Codec::Ternary => "ternary",
            Codec::Quant { .. } => "quant",
            Codec::Sparse { .. } => "sparse",
            Codec::Identity => "none",
        }
    }
}

/// Monte Carlo estimate of `Ĉ_q = E‖Q[v] − v‖² / ‖v‖²`.
pub fn estimate_cq(codec: Codec, v: &DenseVector, trials: usize, stream: &mut RngStream) -> Result<f64> {
    let norm_sq = v.l2_norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::ZeroVector("compression error is relative to the input norm"));
    }
    if trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let mut total = 0.0;
    for _ in 0..trials {
        let decoded = codec.encode(v, stream)?.decode();
        total += decoded.distance_sq(v)?;
    }
    Ok(total / trials as f64 / norm_sq)
}
