//! ℓ2-regularized logistic regression over skewness-controlled synthetic data.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::rng::{derive_stream, Purpose};
use crate::vecmath::DenseVector;

/// How a dataset was generated. Absent for datasets read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// Per-coordinate magnitudes `B̄` after shrinking.
    pub magnitudes: DenseVector,
    /// Which coordinates had `B̄_d ≤ C_th` and were shrunk by `C_sk`.
    pub shrunk: Vec<bool>,
    /// Planted direction `w̄` used to label the data.
    pub planted: DenseVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub n: usize,
    pub d: usize,
    pub c_sk: f64,
    pub c_th: f64,
    pub seed: u64,
    /// Row-major `n × d` feature matrix.
    pub features: Vec<f64>,
    /// Labels in `{−1, +1}`.
    pub labels: Vec<i8>,
    pub provenance: Option<Provenance>,
}

pub(crate) fn validate_generator(n: usize, d: usize, c_sk: f64, c_th: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::config("problem.n", "must be at least 1"));
    }
    if d == 0 {
        return Err(Error::config("problem.d", "must be at least 1"));
    }
    if !(c_sk > 0.0 && c_sk <= 1.0) {
        return Err(Error::config("problem.c_sk", "must lie in (0, 1]"));
    }
    if !(0.0..=1.0).contains(&c_th) {
        return Err(Error::config("problem.c_th", "must lie in [0, 1]"));
    }
    Ok(())
}

/// Generates `n` samples in `d` dimensions.
///
/// Normalized rows `ā_n` are standard normal; one magnitude vector
/// `B̄ ~ U[0,1]^d` is shared by all rows, with every `B̄_d ≤ c_th` shrunk by
/// `c_sk`; features are `ā_n ⊙ B̄`; labels are `sign(ā_nᵀ w̄)` for a planted
/// `w̄ ~ N(0, I)`, with `sign(0) = +1`.
pub fn gen_synthetic(n: usize, d: usize, c_sk: f64, c_th: f64, seed: u64) -> Result<SyntheticDataset> {
    validate_generator(n, d, c_sk, c_th)?;
    let mut rows = derive_stream(seed, 0, 0, Purpose::Dataset);
    let mut mags = derive_stream(seed, 1, 0, Purpose::Dataset);
    let mut dir = derive_stream(seed, 2, 0, Purpose::Dataset);

    let mut shrunk = vec![false; d];
    let magnitudes: Vec<f64> = (0..d)
        .map(|j| {
            let b = mags.uniform();
            if b <= c_th {
                shrunk[j] = true;
                c_sk * b
            } else {
                b
            }
        })
        .collect();
    let planted: Vec<f64> = (0..d).map(|_| dir.standard_normal()).collect();

    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut margin = 0.0;
        for j in 0..d {
            let a = rows.standard_normal();
            margin += a * planted[j];
            features.push(a * magnitudes[j]);
        }
        labels.push(if margin >= 0.0 { 1 } else { -1 });
    }
    Ok(SyntheticDataset {
        n,
        d,
        c_sk,
        c_th,
        seed,
        features,
        labels,
        provenance: Some(Provenance {
            magnitudes: DenseVector::from_raw(magnitudes),
            shrunk,
            planted: DenseVector::from_raw(planted),
        }),
    })
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(m))` without overflow.
fn sigmoid_neg(m: f64) -> f64 {
    if m >= 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    }
}

impl SyntheticDataset {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    fn margin(&self, w: &[f64], i: usize) -> f64 {
        let dot = self.row(i).iter().zip(w).fold(0.0, |acc, (a, b)| acc + a * b);
        self.labels[i] as f64 * dot
    }

    fn check(&self, w: &DenseVector, indices: &[usize]) -> Result<()> {
        if w.len() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                actual: w.len(),
            });
        }
        if indices.is_empty() {
            return Err(Error::config("indices", "batch must not be empty"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::config("indices", format!("sample {bad} out of range")));
        }
        Ok(())
    }

    /// `(1/|B|)·Σ log(1 + exp(−b_n a_nᵀw)) + (λ/2)‖w‖²`
    pub fn logistic_loss(&self, w: &DenseVector, indices: &[usize], lambda2: f64) -> Result<f64> {
        self.check(w, indices)?;
        let data = indices
            .iter()
            .fold(0.0, |acc, &i| acc + softplus(-self.margin(w.as_slice(), i)));
        Ok(data / indices.len() as f64 + 0.5 * lambda2 * w.l2_norm_sq())
    }

    pub fn logistic_grad(&self, w: &DenseVector, indices: &[usize], lambda2: f64) -> Result<DenseVector> {
        self.check(w, indices)?;
        let mut g = vec![0.0; self.d];
        for &i in indices {
            let coef = -(self.labels[i] as f64) * sigmoid_neg(self.margin(w.as_slice(), i));
            for (gj, a) in g.iter_mut().zip(self.row(i)) {
                *gj += coef * a;
            }
        }
        let inv = 1.0 / indices.len() as f64;
        for (gj, wj) in g.iter_mut().zip(w.iter()) {
            *gj = *gj * inv + lambda2 * wj;
        }
        Ok(DenseVector::from_raw(g))
    }

    /// Largest eigenvalue of `AᵀA / n` by power iteration from the all-ones
    /// vector.
    pub fn gram_spectral_radius(&self) -> f64 {
        let mut x = vec![1.0 / (self.d as f64).sqrt(); self.d];
        let mut estimate = 0.0;
        for _ in 0..500 {
            let mut next = vec![0.0; self.d];
            for i in 0..self.n {
                let row = self.row(i);
                let ax = row.iter().zip(&x).fold(0.0, |acc, (a, b)| acc + a * b);
                for (nj, a) in next.iter_mut().zip(row) {
                    *nj += ax * a;
                }
            }
            for nj in next.iter_mut() {
                *nj /= self.n as f64;
            }
            let norm = next.iter().fold(0.0, |acc, v| acc + v * v).sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let converged = ((norm - estimate) / norm).abs() < 1e-13;
            estimate = norm;
            x = next.into_iter().map(|v| v / norm).collect();
            if converged {
                break;
            }
        }
        estimate
    }
}

/// Logistic regression with a fixed ℓ2 coefficient over a shared dataset.
#[derive(Debug)]
pub struct LogRegProblem {
    pub dataset: std::sync::Arc<SyntheticDataset>,
    pub lambda2: f64,
    optimum: OnceLock<(DenseVector, f64)>,
}

/// Gradient-norm tolerance for the reference optimum.
pub const DEFAULT_OPTIMUM_TOL: f64 = 1e-10;
const OPTIMUM_MAX_ITERS: usize = 200_000;

impl LogRegProblem {
    pub fn new(dataset: std::sync::Arc<SyntheticDataset>, lambda2: f64) -> Result<Self> {
        if !(lambda2 >= 0.0 && lambda2.is_finite()) {
            return Err(Error::config("problem.lambda2", "must be finite and non-negative"));
        }
        Ok(Self {
            dataset,
            lambda2,
            optimum: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dataset.d
    }

    pub fn num_samples(&self) -> usize {
        self.dataset.n
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.dataset.n).collect()
    }

    pub fn loss(&self, w: &DenseVector, indices: &[usize]) -> Result<f64> {
        self.dataset.logistic_loss(w, indices, self.lambda2)
    }

    pub fn grad(&self, w: &DenseVector, indices: &[usize]) -> Result<DenseVector> {
        self.dataset.logistic_grad(w, indices, self.lambda2)
    }

    pub fn full_loss(&self, w: &DenseVector) -> Result<f64> {
        self.loss(w, &self.all_indices())
    }

    pub fn full_grad(&self, w: &DenseVector) -> Result<DenseVector> {
        self.grad(w, &self.all_indices())
    }

    /// Smoothness bound `λ_max(AᵀA)/(4n) + λ₂`.
    pub fn smoothness(&self) -> f64 {
        self.dataset.gram_spectral_radius() / 4.0 + self.lambda2
    }

    /// Minimizer and minimum, solved once with the default tolerance and
    /// cached.
    pub fn optimum(&self) -> Result<&(DenseVector, f64)> {
        if let Some(opt) = self.optimum.get() {
            return Ok(opt);
        }
        let solved = self.solve_reference_optimum(DEFAULT_OPTIMUM_TOL)?;
        Ok(self.optimum.get_or_init(|| solved))
    }

    /// Full-batch accelerated gradient descent until `‖∇F‖ ≤ tol`.
    pub fn solve_reference_optimum(&self, tol: f64) -> Result<(DenseVector, f64)> {
        if !(self.lambda2 > 0.0) {
            return Err(Error::config("problem.lambda2", "reference optimum needs lambda2 > 0"));
        }
        let all = self.all_indices();
        // Power iteration approaches λ_max from below; pad it slightly.
        let l = 1.01 * self.smoothness();
        let mu = self.lambda2;
        let momentum = (l.sqrt() - mu.sqrt()) / (l.sqrt() + mu.sqrt());
        let mut x = DenseVector::zeros(self.dim());
        let mut y = x.clone();
        let mut grad_norm = f64::INFINITY;
        for _ in 0..OPTIMUM_MAX_ITERS {
            let g = self.grad(&y, &all)?;
            grad_norm = g.l2_norm();
            if grad_norm <= tol {
                let value = self.loss(&y, &all)?;
                return Ok((y, value));
            }
            let mut next = y.clone();
            next.add_scaled(-1.0 / l, &g)?;
            let mut look = next.clone();
            look.add_scaled(momentum, &next.sub(&x)?)?;
            x = next;
            y = look;
        }
        Err(Error::NoConvergence {
            iterations: OPTIMUM_MAX_ITERS,
            grad_norm,
        })
    }
}

/// Splits `0..n` into `m` contiguous shards whose sizes differ by at most
/// one; the first `n % m` shards get the extra sample.
pub fn partition(n: usize, m: usize) -> Result<Vec<Vec<usize>>> {
    if m == 0 {
        return Err(Error::config("cluster.workers", "must be at least 1"));
    }
    if m > n {
        return Err(Error::config(
            "cluster.workers",
            format!("{m} workers exceed {n} samples"),
        ));
    }
    let base = n / m;
    let extra = n % m;
    let mut start = 0;
    Ok((0..m)
        .map(|k| {
            let len = base + usize::from(k < extra);
            let shard = (start..start + len).collect();
            start += len;
            shard
        })
        .collect())
}
